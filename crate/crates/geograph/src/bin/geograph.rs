fn main() {
    std::process::exit(geograph::cli::main_with(std::env::args_os()));
}
