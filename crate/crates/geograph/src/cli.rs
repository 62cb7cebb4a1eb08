//! The `geograph` command-line tool: every pipeline as a subcommand.
//!
//! Graph-producing subcommands write three artifacts per `--out` stem:
//! `<out>_nodes.{shp,shx,dbf}`, `<out>_edges.{shp,shx,dbf}`, and
//! `<out>.geojson`. The GeoJSON doubles as the graph interchange
//! format consumed by `metrics` and `export`. Exit codes: 0 success,
//! 1 input error (one line on stderr), 2 internal invariant violation.
//! `GEOGRAPH_THREADS` caps the worker pool.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::builder::ArgGroup;
use clap::{Parser, Subcommand, ValueEnum};

use crate::builders::{correlation_network, flow_network, graph_from_adjacency, Threshold};
use crate::error::{Error, Result};
use crate::export::{edges_to_features, nodes_to_features};
use crate::extract::{build_spatial_index, features_to_geograph, find_connections, ConnectionMode};
use crate::feature::{AttrValue, CoordMode, Feature, FeatureCollection, FieldDef, FieldKind, FieldSchema};
use crate::geojson::{from_geojson, to_geojson};
use crate::graph::GeoGraph;
use crate::metrics;
use crate::osm::{aggregate_streets, parse_osm, split_ways_at_crossroads, TagFilter};
use crate::shapefile::{read_shapefile, write_shapefile, ShapefileTriplet};
use crate::tables::{load_od_matrix, load_time_series, read_adjacency_csv};

#[derive(Parser)]
#[command(
    name = "geograph",
    version,
    about = "Convert GIS vector data to graphs and graphs back to GIS layers"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, ValueEnum)]
enum ModeArg {
    /// Connect features whose geometries come within the tolerance.
    Geometric,
    /// Connect features whose part endpoints come within the tolerance.
    Endpoint,
}

impl From<ModeArg> for ConnectionMode {
    fn from(mode: ModeArg) -> ConnectionMode {
        match mode {
            ModeArg::Geometric => ConnectionMode::Geometric,
            ModeArg::Endpoint => ConnectionMode::Endpoint,
        }
    }
}

#[derive(Copy, Clone, ValueEnum)]
enum FormatArg {
    /// Node and edge shapefile triplets.
    Shp,
    /// A single GeoJSON document.
    Geojson,
}

#[derive(Subcommand)]
enum Command {
    /// Build a graph from a polyline shapefile by spatial proximity
    Extract {
        /// Input shapefile stem or .shp path
        #[arg(long = "in")]
        input: PathBuf,
        /// Connection tolerance in coordinate units
        #[arg(long)]
        tol: f64,
        /// How feature connections are detected
        #[arg(long, value_enum, default_value_t = ModeArg::Geometric)]
        mode: ModeArg,
        /// Also write the original geometries with a node_id column
        #[arg(long)]
        keep_geometry: bool,
        /// Output stem
        #[arg(long)]
        out: PathBuf,
    },
    /// Build a street graph from OpenStreetMap XML
    Osm2graph {
        /// Input OSM XML file
        #[arg(long = "in")]
        input: PathBuf,
        /// Way filter: `*`, a tag key, or `key=v1|v2`
        #[arg(long, default_value = "highway")]
        filter: String,
        /// Output stem
        #[arg(long)]
        out: PathBuf,
    },
    /// Bind a point shapefile to an adjacency matrix
    Geocnet {
        /// Point shapefile stem with an integer `id` field
        #[arg(long)]
        points: PathBuf,
        /// Adjacency matrix CSV (0/1, optional id header)
        #[arg(long)]
        adj: PathBuf,
        /// Output stem
        #[arg(long)]
        out: PathBuf,
    },
    /// Connect located time series by Pearson correlation
    Corrnet {
        /// Series CSV: header `timestamp,<id>,...`, `NA` or empty = missing
        #[arg(long)]
        series: PathBuf,
        /// Locations CSV: header `id,x,y`
        #[arg(long)]
        locations: PathBuf,
        /// Correlation threshold (edges require r strictly greater)
        #[arg(long)]
        tau: f64,
        /// Minimum overlapping observations per pair
        #[arg(long)]
        min_overlap: Option<usize>,
        /// Output stem
        #[arg(long)]
        out: PathBuf,
    },
    /// Connect traffic zones by origin-destination flow
    Flownet {
        /// Flow CSV: header `origin,dest,flow`
        #[arg(long)]
        od: PathBuf,
        /// Zone centroid CSV: header `id,x,y`
        #[arg(long)]
        zones: PathBuf,
        /// Flow threshold in people (edges require strictly more)
        #[arg(long, default_value_t = 1000.0)]
        tau: f64,
        /// Output stem
        #[arg(long)]
        out: PathBuf,
    },
    /// Attach node metrics to a graph and re-export it
    #[command(group = ArgGroup::new("which").required(true).multiple(true)
        .args(["betweenness", "clustering", "degree"]))]
    Metrics {
        /// Input graph document (.geojson)
        #[arg(long = "in")]
        input: PathBuf,
        /// Attach betweenness centrality
        #[arg(long)]
        betweenness: bool,
        /// Attach the local clustering coefficient
        #[arg(long)]
        clustering: bool,
        /// Attach the degree
        #[arg(long)]
        degree: bool,
        /// Normalize betweenness by the number of node pairs
        #[arg(long)]
        normalized: bool,
        /// Use edge weights as traversal costs
        #[arg(long)]
        weighted: bool,
        /// Output stem
        #[arg(long)]
        out: PathBuf,
    },
    /// Re-emit a graph document as shapefiles or GeoJSON
    Export {
        /// Input graph document (.geojson)
        #[arg(long = "in")]
        input: PathBuf,
        /// Output format
        #[arg(long, value_enum)]
        format: FormatArg,
        /// Output stem
        #[arg(long)]
        out: PathBuf,
    },
}

fn append_stem(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_os_string();
    s.push(suffix);
    PathBuf::from(s)
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::FileIo {
        path: path.display().to_string(),
        source,
    })
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|source| Error::FileIo {
        path: path.display().to_string(),
        source,
    })
}

fn print_warnings(warnings: &[String]) {
    for w in warnings {
        eprintln!("warning: {w}");
    }
}

/// Write the standard trio: node shapefile, edge shapefile, GeoJSON.
fn write_graph_outputs(g: &GeoGraph, out: &Path) -> Result<()> {
    write_shapefile(&nodes_to_features(g)?, &append_stem(out, "_nodes"))?;
    write_shapefile(&edges_to_features(g)?, &append_stem(out, "_edges"))?;
    let document = to_geojson(g)?;
    crate::shapefile::atomic_write(&append_stem(out, ".geojson"), document.as_bytes())
}

/// Copy a collection, appending a `node_id` column holding each
/// record's graph node id (equal to its record ordinal).
fn with_node_ids(c: &FeatureCollection) -> Result<FeatureCollection> {
    let width = format!("{}", c.features().len().saturating_sub(1)).len().max(1) as u8;
    let mut fields = c.schema().fields().to_vec();
    fields.push(FieldDef::new("node_id", FieldKind::Integer, width, 0));
    let schema = FieldSchema::new(fields)?;
    let mut out = FeatureCollection::new(schema, c.geometry_kind(), CoordMode::Planar);
    for (i, feature) in c.features().iter().enumerate() {
        let mut attributes = feature.attributes.clone();
        attributes.push(AttrValue::Integer(i as i64));
        out.push(Feature {
            geometry: feature.geometry.clone(),
            attributes,
        })?;
    }
    Ok(out)
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Extract {
            input,
            tol,
            mode,
            keep_geometry,
            out,
        } => {
            let triplet = ShapefileTriplet::read_from(&input)?;
            let (c, warnings) = read_shapefile(&triplet, CoordMode::Planar)?;
            print_warnings(&warnings);
            let index = build_spatial_index(&c, None)?;
            let connections = find_connections(&c, &index, tol, mode.into())?;
            let g = features_to_geograph(&c, &connections)?;
            write_graph_outputs(&g, &out)?;
            if keep_geometry {
                write_shapefile(&with_node_ids(&c)?, &append_stem(&out, "_streets"))?;
            }
            Ok(())
        }
        Command::Osm2graph { input, filter, out } => {
            let xml = read_bytes(&input)?;
            let (nodes, ways) = parse_osm(&xml)?;
            let filter = TagFilter::parse(&filter)?;
            let segments = split_ways_at_crossroads(&nodes, &ways, &filter)?;
            let streets = aggregate_streets(&segments)?;
            let g = streets.to_geograph()?;
            write_graph_outputs(&g, &out)
        }
        Command::Geocnet { points, adj, out } => {
            let triplet = ShapefileTriplet::read_from(&points)?;
            let (c, warnings) = read_shapefile(&triplet, CoordMode::Planar)?;
            print_warnings(&warnings);
            let m = read_adjacency_csv(&adj)?;
            let g = graph_from_adjacency(&c, &m)?;
            write_graph_outputs(&g, &out)
        }
        Command::Corrnet {
            series,
            locations,
            tau,
            min_overlap,
            out,
        } => {
            let ts = load_time_series(&series, &locations)?;
            let (g, diagnostics) = correlation_network(&ts, Threshold::new(tau)?, min_overlap)?;
            print_warnings(&diagnostics);
            write_graph_outputs(&g, &out)
        }
        Command::Flownet {
            od,
            zones,
            tau,
            out,
        } => {
            let matrix = load_od_matrix(&od, &zones)?;
            let g = flow_network(&matrix, Threshold::new(tau)?)?;
            write_graph_outputs(&g, &out)
        }
        Command::Metrics {
            input,
            betweenness,
            clustering,
            degree,
            normalized,
            weighted,
            out,
        } => {
            let g = from_geojson(&read_text(&input)?)?;
            let mut vectors = Vec::new();
            if degree {
                vectors.push(metrics::degree(&g));
            }
            if clustering {
                vectors.push(metrics::clustering_coefficient(&g));
            }
            if betweenness {
                vectors.push(metrics::betweenness(&g, normalized, weighted)?);
            }
            let g = metrics::attach_metrics(&g, &vectors)?;
            write_graph_outputs(&g, &out)
        }
        Command::Export { input, format, out } => {
            let g = from_geojson(&read_text(&input)?)?;
            match format {
                FormatArg::Shp => {
                    write_shapefile(&nodes_to_features(&g)?, &append_stem(&out, "_nodes"))?;
                    write_shapefile(&edges_to_features(&g)?, &append_stem(&out, "_edges"))?;
                    Ok(())
                }
                FormatArg::Geojson => {
                    let document = to_geojson(&g)?;
                    crate::shapefile::atomic_write(
                        &append_stem(&out, ".geojson"),
                        document.as_bytes(),
                    )
                }
            }
        }
    }
}

/// Cap the global worker pool from `GEOGRAPH_THREADS` when set.
fn configure_threads() -> std::result::Result<(), String> {
    match std::env::var("GEOGRAPH_THREADS") {
        Err(std::env::VarError::NotPresent) => Ok(()),
        Err(e) => Err(format!("GEOGRAPH_THREADS: {e}")),
        Ok(raw) => {
            let threads: usize = raw
                .trim()
                .parse()
                .ok()
                .filter(|&n| n >= 1)
                .ok_or_else(|| {
                    format!("GEOGRAPH_THREADS: expected a positive integer, got {raw:?}")
                })?;
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build_global()
                .map_err(|e| format!("GEOGRAPH_THREADS: {e}"))
        }
    }
}

/// Parse arguments, run, and translate the outcome to an exit code:
/// 0 success, 1 input error, 2 internal invariant violation.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    if let Err(message) = configure_threads() {
        eprintln!("error: {message}");
        return 1;
    }
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            let text = e.to_string();
            let line = text.lines().next().unwrap_or("invalid arguments");
            eprintln!("{line} (try --help)");
            return 1;
        }
    };
    match run(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_internal() {
                2
            } else {
                1
            }
        }
    }
}
