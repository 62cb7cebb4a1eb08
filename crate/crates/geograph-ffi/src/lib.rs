//! C interface to the geograph toolkit.
//!
//! Every function returns a [`GeoGraphStatus`]; results travel through
//! out-parameters. Graphs are opaque [`GeoGraphHandle`] pointers owned
//! by the caller and released with [`geograph_free`]. On any non-OK
//! status, [`geograph_last_error`] returns a message describing what
//! went wrong on the calling thread.
//!
//! The header `include/geograph.h` is generated from this file at
//! build time.

use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::os::raw::{c_char, c_int, c_long};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use geograph::{
    aggregate_streets, betweenness, build_spatial_index, clustering_coefficient,
    correlation_network, degree, edges_to_features, features_to_geograph, find_connections,
    flow_network, from_geojson, graph_from_adjacency, load_od_matrix, load_time_series,
    nodes_to_features, parse_osm, read_adjacency_csv, read_shapefile, split_ways_at_crossroads,
    to_geojson, write_shapefile, ConnectionMode, CoordMode, GeoGraph, ShapefileTriplet, TagFilter,
    Threshold,
};

/// Outcome of a call. Anything other than `Ok` leaves a description in
/// `geograph_last_error`.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum GeoGraphStatus {
    /// The call succeeded.
    Ok = 0,
    /// A pointer was null, a string was not UTF-8, or a flag value was
    /// out of range.
    InvalidArgument = 1,
    /// The input data violated a documented contract.
    InputError = 2,
    /// An internal invariant failed; the handle state is unspecified.
    InternalError = 3,
    /// The provided buffer cannot hold the result.
    BufferTooSmall = 4,
}

/// An owned graph. Opaque: allocate through the constructors, release
/// with `geograph_free`.
pub struct GeoGraphHandle {
    graph: GeoGraph,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: &str) {
    let text = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = text);
}

fn status_of(err: &geograph::Error) -> GeoGraphStatus {
    set_error(&err.to_string());
    if err.is_internal() {
        GeoGraphStatus::InternalError
    } else {
        GeoGraphStatus::InputError
    }
}

/// Run a fallible body with panic containment.
fn guarded(body: impl FnOnce() -> GeoGraphStatus) -> GeoGraphStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(payload) => {
            let what = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".to_string());
            set_error(&format!("panic: {what}"));
            GeoGraphStatus::InternalError
        }
    }
}

/// Null-checked, UTF-8-checked string argument.
///
/// # Safety
/// `ptr` must be null or point to a NUL-terminated string.
unsafe fn text_arg<'a>(ptr: *const c_char, name: &str) -> Result<&'a str, GeoGraphStatus> {
    if ptr.is_null() {
        set_error(&format!("{name} is null"));
        return Err(GeoGraphStatus::InvalidArgument);
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| {
        set_error(&format!("{name} is not valid UTF-8"));
        GeoGraphStatus::InvalidArgument
    })
}

unsafe fn handle_arg<'a>(
    ptr: *const GeoGraphHandle,
    name: &str,
) -> Result<&'a GeoGraphHandle, GeoGraphStatus> {
    if ptr.is_null() {
        set_error(&format!("{name} is null"));
        return Err(GeoGraphStatus::InvalidArgument);
    }
    Ok(&*ptr)
}

unsafe fn out_arg<'a, T>(ptr: *mut T, name: &str) -> Result<&'a mut T, GeoGraphStatus> {
    if ptr.is_null() {
        set_error(&format!("{name} is null"));
        return Err(GeoGraphStatus::InvalidArgument);
    }
    Ok(&mut *ptr)
}

fn emit(out: *mut *mut GeoGraphHandle, graph: GeoGraph) -> GeoGraphStatus {
    // Checked by the callers before doing any work.
    unsafe {
        *out = Box::into_raw(Box::new(GeoGraphHandle { graph }));
    }
    GeoGraphStatus::Ok
}

macro_rules! try_status {
    ($expr:expr) => {
        match $expr {
            Ok(value) => value,
            Err(status) => return status,
        }
    };
}

macro_rules! try_core {
    ($expr:expr) => {
        match $expr {
            Ok(value) => value,
            Err(err) => return status_of(&err),
        }
    };
}

/// Message for the most recent failure on this thread. The pointer is
/// valid until the next failing call on the same thread. Never null.
#[no_mangle]
pub extern "C" fn geograph_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Release a graph returned by any constructor. A null handle is a
/// no-op.
///
/// # Safety
/// `handle` must be null or a live pointer from a constructor, and
/// must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn geograph_free(handle: *mut GeoGraphHandle) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// Parse a graph from a GeoJSON document (the toolkit's interchange
/// form: Point features with `node_id`, LineString features with
/// `source`/`target`/`weight`).
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` must be a valid
/// pointer to receive the handle.
#[no_mangle]
pub unsafe extern "C" fn geograph_from_geojson(
    text: *const c_char,
    out: *mut *mut GeoGraphHandle,
) -> GeoGraphStatus {
    guarded(|| {
        try_status!(out_arg(out, "out"));
        let text = try_status!(text_arg(text, "text"));
        let graph = try_core!(from_geojson(text));
        emit(out, graph)
    })
}

/// Build a graph from a polyline shapefile: features become nodes,
/// features whose geometries (mode 0) or part endpoints (mode 1) come
/// within `tol` become connected.
///
/// # Safety
/// `stem` must be a NUL-terminated path; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn geograph_extract_shapefile(
    stem: *const c_char,
    tol: f64,
    endpoint_mode: c_int,
    out: *mut *mut GeoGraphHandle,
) -> GeoGraphStatus {
    guarded(|| {
        try_status!(out_arg(out, "out"));
        let stem = try_status!(text_arg(stem, "stem"));
        let mode = match endpoint_mode {
            0 => ConnectionMode::Geometric,
            1 => ConnectionMode::Endpoint,
            other => {
                set_error(&format!("endpoint_mode must be 0 or 1, got {other}"));
                return GeoGraphStatus::InvalidArgument;
            }
        };
        let triplet = try_core!(ShapefileTriplet::read_from(Path::new(stem)));
        let (collection, _warnings) = try_core!(read_shapefile(&triplet, CoordMode::Planar));
        let index = try_core!(build_spatial_index(&collection, None));
        let connections = try_core!(find_connections(&collection, &index, tol, mode));
        let graph = try_core!(features_to_geograph(&collection, &connections));
        emit(out, graph)
    })
}

/// Build a street graph from OpenStreetMap XML text. `filter` selects
/// ways: `"*"`, a tag key such as `"highway"`, or `"key=v1|v2"`.
///
/// # Safety
/// `xml` and `filter` must be NUL-terminated strings; `out` must be
/// valid.
#[no_mangle]
pub unsafe extern "C" fn geograph_from_osm_xml(
    xml: *const c_char,
    filter: *const c_char,
    out: *mut *mut GeoGraphHandle,
) -> GeoGraphStatus {
    guarded(|| {
        try_status!(out_arg(out, "out"));
        let xml = try_status!(text_arg(xml, "xml"));
        let filter = try_status!(text_arg(filter, "filter"));
        let filter = try_core!(TagFilter::parse(filter));
        let (nodes, ways) = try_core!(parse_osm(xml.as_bytes()));
        let segments = try_core!(split_ways_at_crossroads(&nodes, &ways, &filter));
        let streets = try_core!(aggregate_streets(&segments));
        let graph = try_core!(streets.to_geograph());
        emit(out, graph)
    })
}

/// Bind a point shapefile (integer `id` field required) to a 0/1
/// adjacency matrix CSV.
///
/// # Safety
/// `points_stem` and `adjacency_csv` must be NUL-terminated paths;
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn geograph_from_adjacency(
    points_stem: *const c_char,
    adjacency_csv: *const c_char,
    out: *mut *mut GeoGraphHandle,
) -> GeoGraphStatus {
    guarded(|| {
        try_status!(out_arg(out, "out"));
        let stem = try_status!(text_arg(points_stem, "points_stem"));
        let adj = try_status!(text_arg(adjacency_csv, "adjacency_csv"));
        let triplet = try_core!(ShapefileTriplet::read_from(Path::new(stem)));
        let (points, _warnings) = try_core!(read_shapefile(&triplet, CoordMode::Planar));
        let matrix = try_core!(read_adjacency_csv(Path::new(adj)));
        let graph = try_core!(graph_from_adjacency(&points, &matrix));
        emit(out, graph)
    })
}

/// Connect located time series whose Pearson correlation strictly
/// exceeds `tau`. `min_overlap` below 0 selects the default (10 when
/// observations are missing, the full length otherwise).
///
/// # Safety
/// `series_csv` and `locations_csv` must be NUL-terminated paths;
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn geograph_correlation_network(
    series_csv: *const c_char,
    locations_csv: *const c_char,
    tau: f64,
    min_overlap: c_long,
    out: *mut *mut GeoGraphHandle,
) -> GeoGraphStatus {
    guarded(|| {
        try_status!(out_arg(out, "out"));
        let series = try_status!(text_arg(series_csv, "series_csv"));
        let locations = try_status!(text_arg(locations_csv, "locations_csv"));
        let ts = try_core!(load_time_series(Path::new(series), Path::new(locations)));
        let tau = try_core!(Threshold::new(tau));
        let overlap = usize::try_from(min_overlap).ok();
        let (graph, _diagnostics) = try_core!(correlation_network(&ts, tau, overlap));
        emit(out, graph)
    })
}

/// Connect traffic zones whose summed two-way flow strictly exceeds
/// `tau`. Nodes carry a `degree` attribute.
///
/// # Safety
/// `od_csv` and `zones_csv` must be NUL-terminated paths; `out` must
/// be valid.
#[no_mangle]
pub unsafe extern "C" fn geograph_flow_network(
    od_csv: *const c_char,
    zones_csv: *const c_char,
    tau: f64,
    out: *mut *mut GeoGraphHandle,
) -> GeoGraphStatus {
    guarded(|| {
        try_status!(out_arg(out, "out"));
        let od = try_status!(text_arg(od_csv, "od_csv"));
        let zones = try_status!(text_arg(zones_csv, "zones_csv"));
        let matrix = try_core!(load_od_matrix(Path::new(od), Path::new(zones)));
        let tau = try_core!(Threshold::new(tau));
        let graph = try_core!(flow_network(&matrix, tau));
        emit(out, graph)
    })
}

/// Number of nodes.
///
/// # Safety
/// `handle` must be a live handle; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn geograph_node_count(
    handle: *const GeoGraphHandle,
    out: *mut usize,
) -> GeoGraphStatus {
    guarded(|| {
        let out = try_status!(out_arg(out, "out"));
        let handle = try_status!(handle_arg(handle, "handle"));
        *out = handle.graph.node_count();
        GeoGraphStatus::Ok
    })
}

/// Number of edges.
///
/// # Safety
/// `handle` must be a live handle; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn geograph_edge_count(
    handle: *const GeoGraphHandle,
    out: *mut usize,
) -> GeoGraphStatus {
    guarded(|| {
        let out = try_status!(out_arg(out, "out"));
        let handle = try_status!(handle_arg(handle, "handle"));
        *out = handle.graph.edge_count();
        GeoGraphStatus::Ok
    })
}

/// Fill `buf` with all node ids in ascending order. `cap` is the
/// capacity of `buf` in elements; `geograph_node_count` gives the
/// required size.
///
/// # Safety
/// `handle` must be a live handle; `buf` must point to at least `cap`
/// writable elements.
#[no_mangle]
pub unsafe extern "C" fn geograph_node_ids(
    handle: *const GeoGraphHandle,
    buf: *mut i64,
    cap: usize,
) -> GeoGraphStatus {
    guarded(|| {
        let handle = try_status!(handle_arg(handle, "handle"));
        let n = handle.graph.node_count();
        if n > 0 && buf.is_null() {
            set_error("buf is null");
            return GeoGraphStatus::InvalidArgument;
        }
        if cap < n {
            set_error(&format!("buffer holds {cap} ids, need {n}"));
            return GeoGraphStatus::BufferTooSmall;
        }
        let slice = std::slice::from_raw_parts_mut(buf, n);
        for (slot, id) in slice.iter_mut().zip(handle.graph.node_ids()) {
            *slot = id;
        }
        GeoGraphStatus::Ok
    })
}

/// Location of one node.
///
/// # Safety
/// `handle` must be a live handle; `x` and `y` must be valid.
#[no_mangle]
pub unsafe extern "C" fn geograph_node_location(
    handle: *const GeoGraphHandle,
    node_id: i64,
    x: *mut f64,
    y: *mut f64,
) -> GeoGraphStatus {
    guarded(|| {
        let x = try_status!(out_arg(x, "x"));
        let y = try_status!(out_arg(y, "y"));
        let handle = try_status!(handle_arg(handle, "handle"));
        match handle.graph.node(node_id) {
            Some(node) => {
                *x = node.location.x;
                *y = node.location.y;
                GeoGraphStatus::Ok
            }
            None => {
                set_error(&format!("unknown node id {node_id}"));
                GeoGraphStatus::InputError
            }
        }
    })
}

fn fill_metric(
    handle: &GeoGraphHandle,
    values: &std::collections::BTreeMap<i64, f64>,
    buf: *mut f64,
    cap: usize,
) -> GeoGraphStatus {
    let n = handle.graph.node_count();
    if n > 0 && buf.is_null() {
        set_error("buf is null");
        return GeoGraphStatus::InvalidArgument;
    }
    if cap < n {
        set_error(&format!("buffer holds {cap} values, need {n}"));
        return GeoGraphStatus::BufferTooSmall;
    }
    let slice = unsafe { std::slice::from_raw_parts_mut(buf, n) };
    // BTreeMap iteration pairs each slot with the same ascending id
    // order geograph_node_ids uses.
    for (slot, value) in slice.iter_mut().zip(values.values()) {
        *slot = *value;
    }
    GeoGraphStatus::Ok
}

/// Fill `buf` with each node's degree, ordered by ascending node id
/// (the order `geograph_node_ids` reports).
///
/// # Safety
/// `handle` must be a live handle; `buf` must point to at least `cap`
/// writable doubles.
#[no_mangle]
pub unsafe extern "C" fn geograph_degree(
    handle: *const GeoGraphHandle,
    buf: *mut f64,
    cap: usize,
) -> GeoGraphStatus {
    guarded(|| {
        let handle = try_status!(handle_arg(handle, "handle"));
        let metric = degree(&handle.graph);
        fill_metric(handle, metric.values(), buf, cap)
    })
}

/// Fill `buf` with each node's local clustering coefficient, ordered
/// by ascending node id.
///
/// # Safety
/// `handle` must be a live handle; `buf` must point to at least `cap`
/// writable doubles.
#[no_mangle]
pub unsafe extern "C" fn geograph_clustering(
    handle: *const GeoGraphHandle,
    buf: *mut f64,
    cap: usize,
) -> GeoGraphStatus {
    guarded(|| {
        let handle = try_status!(handle_arg(handle, "handle"));
        let metric = clustering_coefficient(&handle.graph);
        fill_metric(handle, metric.values(), buf, cap)
    })
}

/// Fill `buf` with each node's betweenness centrality, ordered by
/// ascending node id. Nonzero `normalized` divides by the number of
/// node pairs; nonzero `weighted` uses edge weights as costs.
///
/// # Safety
/// `handle` must be a live handle; `buf` must point to at least `cap`
/// writable doubles.
#[no_mangle]
pub unsafe extern "C" fn geograph_betweenness(
    handle: *const GeoGraphHandle,
    normalized: c_int,
    weighted: c_int,
    buf: *mut f64,
    cap: usize,
) -> GeoGraphStatus {
    guarded(|| {
        let handle = try_status!(handle_arg(handle, "handle"));
        let metric = try_core!(betweenness(&handle.graph, normalized != 0, weighted != 0));
        fill_metric(handle, metric.values(), buf, cap)
    })
}

/// Attach the selected metrics (nonzero flags) to the graph as node
/// attributes, so subsequent writers emit them.
///
/// # Safety
/// `handle` must be a live, exclusively held handle.
#[no_mangle]
pub unsafe extern "C" fn geograph_attach_metrics(
    handle: *mut GeoGraphHandle,
    with_degree: c_int,
    with_clustering: c_int,
    with_betweenness: c_int,
    normalized: c_int,
    weighted: c_int,
) -> GeoGraphStatus {
    guarded(|| {
        if handle.is_null() {
            set_error("handle is null");
            return GeoGraphStatus::InvalidArgument;
        }
        let handle = &mut *handle;
        let mut vectors = Vec::new();
        if with_degree != 0 {
            vectors.push(degree(&handle.graph));
        }
        if with_clustering != 0 {
            vectors.push(clustering_coefficient(&handle.graph));
        }
        if with_betweenness != 0 {
            vectors.push(try_core!(betweenness(
                &handle.graph,
                normalized != 0,
                weighted != 0
            )));
        }
        handle.graph = try_core!(geograph::attach_metrics(&handle.graph, &vectors));
        GeoGraphStatus::Ok
    })
}

/// Write `<stem>_nodes.{shp,shx,dbf}` and `<stem>_edges.{shp,shx,dbf}`.
///
/// # Safety
/// `handle` must be a live handle; `stem` must be a NUL-terminated
/// path.
#[no_mangle]
pub unsafe extern "C" fn geograph_write_shapefiles(
    handle: *const GeoGraphHandle,
    stem: *const c_char,
) -> GeoGraphStatus {
    guarded(|| {
        let handle = try_status!(handle_arg(handle, "handle"));
        let stem = try_status!(text_arg(stem, "stem"));
        let nodes = try_core!(nodes_to_features(&handle.graph));
        let edges = try_core!(edges_to_features(&handle.graph));
        try_core!(write_shapefile(&nodes, Path::new(&format!("{stem}_nodes"))));
        try_core!(write_shapefile(&edges, Path::new(&format!("{stem}_edges"))));
        GeoGraphStatus::Ok
    })
}

/// Serialize the graph as GeoJSON into `buf` (NUL-terminated). Sets
/// `*needed` to the required capacity including the terminator. When
/// `buf` is null or `cap` is too small, returns `BufferTooSmall` with
/// `*needed` set, so call once with `cap` 0 to size the buffer.
///
/// # Safety
/// `handle` must be a live handle; `needed` must be valid; `buf` must
/// point to at least `cap` writable bytes when non-null.
#[no_mangle]
pub unsafe extern "C" fn geograph_to_geojson(
    handle: *const GeoGraphHandle,
    buf: *mut c_char,
    cap: usize,
    needed: *mut usize,
) -> GeoGraphStatus {
    guarded(|| {
        let needed = try_status!(out_arg(needed, "needed"));
        let handle = try_status!(handle_arg(handle, "handle"));
        let document = try_core!(to_geojson(&handle.graph));
        *needed = document.len() + 1;
        if buf.is_null() || cap < *needed {
            if !buf.is_null() {
                set_error(&format!("buffer holds {cap} bytes, need {}", *needed));
            }
            return GeoGraphStatus::BufferTooSmall;
        }
        let slice = std::slice::from_raw_parts_mut(buf as *mut u8, *needed);
        slice[..document.len()].copy_from_slice(document.as_bytes());
        slice[document.len()] = 0;
        GeoGraphStatus::Ok
    })
}

/// Write the graph as a GeoJSON document to `path` (atomically).
///
/// # Safety
/// `handle` must be a live handle; `path` must be a NUL-terminated
/// path.
#[no_mangle]
pub unsafe extern "C" fn geograph_write_geojson(
    handle: *const GeoGraphHandle,
    path: *const c_char,
) -> GeoGraphStatus {
    guarded(|| {
        let handle = try_status!(handle_arg(handle, "handle"));
        let path = try_status!(text_arg(path, "path"));
        let document = try_core!(to_geojson(&handle.graph));
        try_core!(
            std::fs::write(path, document.as_bytes()).map_err(|source| {
                geograph::Error::FileIo {
                    path: path.into(),
                    source,
                }
            })
        );
        GeoGraphStatus::Ok
    })
}
