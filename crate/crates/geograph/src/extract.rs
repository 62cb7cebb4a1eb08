//! Connection detection between polyline features and graph
//! construction: one node per feature, one edge per detected connection.
//!
//! Detection runs in two stages. A uniform grid over the collection's
//! extent proposes candidate feature pairs (every pair whose segment
//! boxes come within the tolerance of each other); an exact geometric
//! test then confirms or rejects each candidate. The grid never misses
//! a pair the exact test would accept, so the result equals the
//! all-pairs computation.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::feature::{Feature, FeatureCollection, Geometry, GeometryKind};
use crate::geometry::{point_along, point_segment_distance, segment_segment_distance};
use crate::geometry::{BoundingBox, GeoPoint};
use crate::graph::GeoGraph;

/// How two features come to count as connected.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConnectionMode {
    /// Any segment of one feature crosses, touches, or passes within
    /// the tolerance of any segment of the other.
    Geometric,
    /// A part endpoint of one feature lies within the tolerance of the
    /// other feature (in either direction).
    Endpoint,
}

/// A confirmed connection between features `i` and `j` (`i < j`),
/// witnessed by a point within tolerance of both.
#[derive(Debug, Clone, PartialEq)]
pub struct Connection {
    pub i: usize,
    pub j: usize,
    pub witness: GeoPoint,
}

/// Deduplicated connections in ascending (i, j) order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConnectionList(Vec<Connection>);

impl ConnectionList {
    /// Normalize (swap so i < j), sort by (i, j), and drop duplicate
    /// pairs keeping the first witness. Self-pairs are rejected.
    pub fn new(mut connections: Vec<Connection>) -> Result<Self> {
        for c in &mut connections {
            if c.i == c.j {
                return Err(Error::SelfLoop(c.i as i64));
            }
            if c.i > c.j {
                std::mem::swap(&mut c.i, &mut c.j);
            }
        }
        connections.sort_by_key(|c| (c.i, c.j));
        connections.dedup_by_key(|c| (c.i, c.j));
        Ok(ConnectionList(connections))
    }

    pub fn iter(&self) -> impl Iterator<Item = &Connection> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn pairs(&self) -> Vec<(usize, usize)> {
        self.0.iter().map(|c| (c.i, c.j)).collect()
    }
}

/// One indexed segment: feature, part, and segment position.
type SegmentRef = (u32, u32, u32);

/// Uniform grid over the collection extent. Every segment is registered
/// in each cell its bounding box overlaps, so a box query returns a
/// superset of the segments that could intersect the query box.
#[derive(Debug)]
pub struct SpatialIndex {
    extent: BoundingBox,
    cell: f64,
    cols: u32,
    rows: u32,
    cells: HashMap<(u32, u32), Vec<SegmentRef>>,
    segment_count: usize,
}

/// Cells never shrink below this edge length, whatever the requested
/// size; a zero cell would put every segment in infinitely many cells.
const MIN_CELL: f64 = 1e-12;

impl SpatialIndex {
    pub fn cell_size(&self) -> f64 {
        self.cell
    }

    pub fn segment_count(&self) -> usize {
        self.segment_count
    }

    fn col_of(&self, x: f64) -> u32 {
        let c = ((x - self.extent.min_x) / self.cell).floor();
        (c.max(0.0) as u32).min(self.cols - 1)
    }

    fn row_of(&self, y: f64) -> u32 {
        let r = ((y - self.extent.min_y) / self.cell).floor();
        (r.max(0.0) as u32).min(self.rows - 1)
    }

    /// All segments registered in cells overlapping `query`. Returns a
    /// superset of the segments whose own boxes overlap `query`; empty
    /// when the query box misses the indexed extent entirely.
    pub fn query(&self, query: &BoundingBox) -> BTreeSet<SegmentRef> {
        let mut out = BTreeSet::new();
        if !query.overlaps(&self.extent) {
            return out;
        }
        let (c0, c1) = (self.col_of(query.min_x), self.col_of(query.max_x));
        let (r0, r1) = (self.row_of(query.min_y), self.row_of(query.max_y));
        for c in c0..=c1 {
            for r in r0..=r1 {
                if let Some(entries) = self.cells.get(&(c, r)) {
                    out.extend(entries.iter().copied());
                }
            }
        }
        out
    }
}

/// One table row: (part, segment, start, end, bbox).
type SegmentRow = (u32, u32, GeoPoint, GeoPoint, BoundingBox);

/// Per-feature segment table so the exact tests can address segments by
/// (part, segment) without re-walking geometry.
struct SegmentTable {
    by_feature: Vec<Vec<SegmentRow>>,
    /// For each feature: part endpoints as (part, point).
    endpoints: Vec<Vec<(u32, GeoPoint)>>,
}

fn segment_table(c: &FeatureCollection) -> SegmentTable {
    let mut by_feature = Vec::with_capacity(c.features().len());
    let mut endpoints = Vec::with_capacity(c.features().len());
    for feature in c.features() {
        let mut segs = Vec::new();
        let mut ends = Vec::new();
        if let Some(Geometry::PolyLine(line)) = &feature.geometry {
            for (pi, si, a, b) in line.segments() {
                let (a, b) = (*a, *b);
                let bbox = BoundingBox::of_point(&a).merge(&BoundingBox::of_point(&b));
                segs.push((pi as u32, si as u32, a, b, bbox));
            }
            for (pi, part) in line.parts().iter().enumerate() {
                ends.push((pi as u32, part[0]));
                ends.push((pi as u32, *part.last().unwrap()));
            }
        }
        by_feature.push(segs);
        endpoints.push(ends);
    }
    SegmentTable {
        by_feature,
        endpoints,
    }
}

/// Build the uniform grid. With `cell_size` unset the cell edge is
/// max(extent width, height) / ceil(sqrt(segment count)), clamped to a
/// positive minimum; a degenerate extent falls back to a single cell.
pub fn build_spatial_index(
    c: &FeatureCollection,
    cell_size: Option<f64>,
) -> Result<SpatialIndex> {
    if c.geometry_kind() != GeometryKind::PolyLine {
        return Err(Error::GeometryKindMismatch {
            expected: GeometryKind::PolyLine.name(),
        });
    }
    if c.features().is_empty() {
        return Err(Error::EmptyCollection);
    }
    let extent = c.bbox().ok_or(Error::EmptyCollection)?;

    let table = segment_table(c);
    let segment_count: usize = table.by_feature.iter().map(Vec::len).sum();
    if segment_count == 0 {
        return Err(Error::EmptyCollection);
    }

    let span = extent.width().max(extent.height());
    let cell = match cell_size {
        Some(size) => {
            if !(size.is_finite() && size > 0.0) {
                return Err(Error::NegativeTolerance(size));
            }
            size.max(MIN_CELL)
        }
        None => {
            let buckets = (segment_count as f64).sqrt().ceil().max(1.0);
            (span / buckets).max(MIN_CELL)
        }
    };

    let cols = ((extent.width() / cell).ceil() as u32).max(1);
    let rows = ((extent.height() / cell).ceil() as u32).max(1);

    let mut index = SpatialIndex {
        extent,
        cell,
        cols,
        rows,
        cells: HashMap::new(),
        segment_count,
    };
    for (fi, segs) in table.by_feature.iter().enumerate() {
        for &(pi, si, _, _, ref bbox) in segs {
            let (c0, c1) = (index.col_of(bbox.min_x), index.col_of(bbox.max_x));
            let (r0, r1) = (index.row_of(bbox.min_y), index.row_of(bbox.max_y));
            for col in c0..=c1 {
                for row in r0..=r1 {
                    index
                        .cells
                        .entry((col, row))
                        .or_default()
                        .push((fi as u32, pi, si));
                }
            }
        }
    }
    Ok(index)
}

/// Exact test for one candidate pair in geometric mode: the minimum
/// distance over all segment pairs, scanned in (part, segment) order
/// with strict improvement so the first minimum supplies the witness.
fn geometric_witness(
    a: &[(u32, u32, GeoPoint, GeoPoint, BoundingBox)],
    b: &[(u32, u32, GeoPoint, GeoPoint, BoundingBox)],
    tol: f64,
) -> Option<GeoPoint> {
    let mut best: Option<(f64, GeoPoint)> = None;
    for &(_, _, a0, a1, ref bbox_a) in a {
        for &(_, _, b0, b1, ref bbox_b) in b {
            if !bbox_a.expand(tol).overlaps(bbox_b) {
                continue;
            }
            let (d, witness) = segment_segment_distance(&a0, &a1, &b0, &b1);
            if best.as_ref().is_none_or(|(bd, _)| d < *bd) {
                best = Some((d, witness));
                if d == 0.0 {
                    return Some(witness);
                }
            }
        }
    }
    best.filter(|(d, _)| *d <= tol).map(|(_, w)| w)
}

/// Exact test in endpoint mode: some part endpoint of one feature lies
/// within tolerance of the other feature's segments. The witness is the
/// midpoint between the endpoint and its closest point on the other
/// feature, minimum distance first, scanned endpoints-of-`a` first.
fn endpoint_witness(
    ends_a: &[(u32, GeoPoint)],
    segs_a: &[(u32, u32, GeoPoint, GeoPoint, BoundingBox)],
    ends_b: &[(u32, GeoPoint)],
    segs_b: &[(u32, u32, GeoPoint, GeoPoint, BoundingBox)],
    tol: f64,
) -> Option<GeoPoint> {
    let mut best: Option<(f64, GeoPoint)> = None;
    let scan = |ends: &[(u32, GeoPoint)],
                    segs: &[(u32, u32, GeoPoint, GeoPoint, BoundingBox)],
                    best: &mut Option<(f64, GeoPoint)>| {
        for &(_, e) in ends {
            for &(_, _, s0, s1, ref bbox) in segs {
                if !bbox.expand(tol).contains(&e) {
                    continue;
                }
                let (d, closest) = point_segment_distance(&e, &s0, &s1);
                if best.as_ref().is_none_or(|(bd, _)| d < *bd) {
                    *best = Some((d, e.midpoint(&closest)));
                }
            }
        }
    };
    scan(ends_a, segs_b, &mut best);
    if !matches!(best, Some((d, _)) if d == 0.0) {
        scan(ends_b, segs_a, &mut best);
    }
    best.filter(|(d, _)| *d <= tol).map(|(_, w)| w)
}

/// Detect connected feature pairs. Candidates come from the index; the
/// exact per-pair test decides. The result is ordered by (i, j) and does
/// not depend on how many workers share the candidate list.
pub fn find_connections(
    c: &FeatureCollection,
    index: &SpatialIndex,
    tol: f64,
    mode: ConnectionMode,
) -> Result<ConnectionList> {
    if !(tol.is_finite() && tol >= 0.0) {
        return Err(Error::NegativeTolerance(tol));
    }
    let table = segment_table(c);

    // Stage 1: candidate feature pairs whose segment boxes come within
    // tol of each other.
    let mut candidates: BTreeSet<(usize, usize)> = BTreeSet::new();
    for (fi, segs) in table.by_feature.iter().enumerate() {
        for (_, _, _, _, bbox) in segs {
            for (fj, _, _) in index.query(&bbox.expand(tol)) {
                let fj = fj as usize;
                if fj > fi {
                    candidates.insert((fi, fj));
                }
            }
        }
    }

    // Stage 2: exact confirmation, parallel over the ordered candidate
    // list; order is restored by collecting positionally.
    let ordered: Vec<(usize, usize)> = candidates.into_iter().collect();
    let confirmed: Vec<Option<Connection>> = ordered
        .par_iter()
        .map(|&(i, j)| {
            let witness = match mode {
                ConnectionMode::Geometric => {
                    geometric_witness(&table.by_feature[i], &table.by_feature[j], tol)
                }
                ConnectionMode::Endpoint => endpoint_witness(
                    &table.endpoints[i],
                    &table.by_feature[i],
                    &table.endpoints[j],
                    &table.by_feature[j],
                    tol,
                ),
            };
            witness.map(|witness| Connection { i, j, witness })
        })
        .collect();

    ConnectionList::new(confirmed.into_iter().flatten().collect())
}

/// The point that stands for a feature when it becomes a node: a point
/// geometry is its own location; a polyline is represented by the point
/// halfway along its longest part (lowest part index on ties).
pub fn representative_point(feature: &Feature) -> Result<GeoPoint> {
    match &feature.geometry {
        None => Err(Error::NullGeometry),
        Some(Geometry::Point(p)) => Ok(*p),
        Some(Geometry::PolyLine(line)) => {
            let mut longest = 0usize;
            let mut longest_len = f64::NEG_INFINITY;
            for (pi, _) in line.parts().iter().enumerate() {
                let len = line.part_length(pi);
                if len > longest_len {
                    longest = pi;
                    longest_len = len;
                }
            }
            Ok(point_along(&line.parts()[longest], 0.5))
        }
    }
}

/// Build the feature graph: node ids are feature ordinals, node
/// attributes copy the feature's attributes, and each connection
/// becomes a unit-weight edge recording its witness coordinates.
pub fn features_to_geograph(
    c: &FeatureCollection,
    connections: &ConnectionList,
) -> Result<GeoGraph> {
    let n = c.features().len();
    let names: Vec<&str> = c
        .schema()
        .fields()
        .iter()
        .map(|f| f.name.as_str())
        .collect();

    let mut graph = GeoGraph::new();
    for (fi, feature) in c.features().iter().enumerate() {
        let location = representative_point(feature)?;
        let attrs: BTreeMap<String, crate::feature::AttrValue> = names
            .iter()
            .zip(&feature.attributes)
            .map(|(name, value)| (name.to_string(), value.clone()))
            .collect();
        graph.add_node(fi as i64, location, attrs);
    }
    for conn in connections.iter() {
        if conn.i >= n || conn.j >= n {
            return Err(Error::ConnectionIndexOutOfRange {
                index: conn.i.max(conn.j),
                features: n,
            });
        }
        let attrs = BTreeMap::from([
            (
                "witness_x".to_string(),
                crate::feature::AttrValue::Real(conn.witness.x),
            ),
            (
                "witness_y".to_string(),
                crate::feature::AttrValue::Real(conn.witness.y),
            ),
        ]);
        graph.add_edge(conn.i as i64, conn.j as i64, 1.0, attrs)?;
    }
    Ok(graph)
}
