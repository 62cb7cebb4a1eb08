//! Graph construction from non-GIS sources: correlation networks over
//! located time series, flow networks over origin-destination counts,
//! and graphs bound to point layers through an adjacency matrix.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::feature::{AttrValue, FeatureCollection, FieldKind, Geometry, GeometryKind};
use crate::geometry::GeoPoint;
use crate::graph::{AdjacencyMatrix, GeoGraph};
use crate::metrics;

/// A set of equally long series, one per located node. `None` marks a
/// missing observation.
#[derive(Debug, Clone)]
pub struct TimeSeriesSet {
    ids: Vec<i64>,
    locations: Vec<GeoPoint>,
    series: Vec<Vec<Option<f64>>>,
    len: usize,
}

impl TimeSeriesSet {
    /// Entries are sorted by id; all series must share one length of
    /// at least 2 and contain only finite or missing values.
    pub fn new(mut entries: Vec<(i64, GeoPoint, Vec<Option<f64>>)>) -> Result<Self> {
        entries.sort_by_key(|(id, _, _)| *id);
        for pair in entries.windows(2) {
            if pair[0].0 == pair[1].0 {
                return Err(Error::DuplicateSeriesId(pair[0].0));
            }
        }
        let len = entries.first().map_or(0, |(_, _, s)| s.len());
        if !entries.is_empty() && len < 2 {
            return Err(Error::ShortSeries);
        }
        for (id, _, series) in &entries {
            if series.len() != len {
                return Err(Error::SeriesLengthMismatch {
                    left: len,
                    right: series.len(),
                });
            }
            for (index, sample) in series.iter().enumerate() {
                if sample.is_some_and(|v| !v.is_finite()) {
                    return Err(Error::NonFiniteSample { id: *id, index });
                }
            }
        }
        let mut ids = Vec::with_capacity(entries.len());
        let mut locations = Vec::with_capacity(entries.len());
        let mut series = Vec::with_capacity(entries.len());
        for (id, location, s) in entries {
            ids.push(id);
            locations.push(location);
            series.push(s);
        }
        Ok(TimeSeriesSet {
            ids,
            locations,
            series,
            len,
        })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Number of observations per series.
    pub fn series_len(&self) -> usize {
        self.len
    }

    pub fn ids(&self) -> &[i64] {
        &self.ids
    }

    pub fn location_at(&self, index: usize) -> GeoPoint {
        self.locations[index]
    }

    pub fn series_at(&self, index: usize) -> &[Option<f64>] {
        &self.series[index]
    }

    pub fn has_missing(&self) -> bool {
        self.series
            .iter()
            .any(|s| s.iter().any(|v| v.is_none()))
    }
}

/// Strict cutoff: a pair connects only when its statistic is strictly
/// greater than the value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Threshold {
    value: f64,
}

impl Threshold {
    pub fn new(value: f64) -> Result<Self> {
        if !value.is_finite() {
            return Err(Error::NonFiniteThreshold);
        }
        Ok(Threshold { value })
    }

    pub fn value(self) -> f64 {
        self.value
    }

    pub fn exceeded_by(self, x: f64) -> bool {
        x > self.value
    }
}

/// Directed person flows between located zones. Absent pairs count as
/// zero flow.
#[derive(Debug, Clone)]
pub struct ODMatrix {
    ids: Vec<i64>,
    locations: Vec<GeoPoint>,
    flows: BTreeMap<(i64, i64), f64>,
}

impl ODMatrix {
    /// Each directed pair may appear at most once; a repeat is a data
    /// defect, not an accumulation.
    pub fn new(mut zones: Vec<(i64, GeoPoint)>, entries: &[(i64, i64, f64)]) -> Result<Self> {
        zones.sort_by_key(|(id, _)| *id);
        for pair in zones.windows(2) {
            if pair[0].0 == pair[1].0 {
                return Err(Error::DuplicateZone(pair[0].0));
            }
        }
        let known: BTreeSet<i64> = zones.iter().map(|(id, _)| *id).collect();
        let mut flows = BTreeMap::new();
        for &(origin, dest, flow) in entries {
            if !known.contains(&origin) {
                return Err(Error::UnknownZone(origin));
            }
            if !known.contains(&dest) {
                return Err(Error::UnknownZone(dest));
            }
            if !flow.is_finite() {
                return Err(Error::NonFiniteFlow { origin, dest });
            }
            if flow < 0.0 {
                return Err(Error::NegativeFlow { origin, dest, flow });
            }
            if flows.insert((origin, dest), flow).is_some() {
                return Err(Error::DuplicateFlowEntry { origin, dest });
            }
        }
        let (ids, locations) = zones.into_iter().unzip();
        Ok(ODMatrix {
            ids,
            locations,
            flows,
        })
    }

    pub fn zone_ids(&self) -> &[i64] {
        &self.ids
    }

    pub fn location_at(&self, index: usize) -> GeoPoint {
        self.locations[index]
    }

    /// Directed flow, zero when the pair is absent.
    pub fn flow(&self, origin: i64, dest: i64) -> f64 {
        self.flows.get(&(origin, dest)).copied().unwrap_or(0.0)
    }

    /// Total people moving between the two zones in either direction.
    pub fn symmetrized(&self, u: i64, v: i64) -> f64 {
        self.flow(u, v) + self.flow(v, u)
    }
}

/// Pearson correlation over the indices where both series have values.
/// Returns None (undefined) when the overlap is shorter than
/// `min_overlap` or either side has zero variance. Values of
/// `min_overlap` below 2 are treated as 2.
pub fn pearson(x: &[Option<f64>], y: &[Option<f64>], min_overlap: usize) -> Result<Option<f64>> {
    if x.len() != y.len() {
        return Err(Error::SeriesLengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    let min_overlap = min_overlap.max(2);
    let overlap: Vec<(f64, f64)> = x
        .iter()
        .zip(y)
        .filter_map(|(a, b)| a.zip(*b))
        .collect();
    if overlap.len() < min_overlap {
        return Ok(None);
    }
    let n = overlap.len() as f64;
    let mean_x: f64 = overlap.iter().map(|(a, _)| a).sum::<f64>() / n;
    let mean_y: f64 = overlap.iter().map(|(_, b)| b).sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var_x = 0.0;
    let mut var_y = 0.0;
    for (a, b) in &overlap {
        let dx = a - mean_x;
        let dy = b - mean_y;
        cov += dx * dy;
        var_x += dx * dx;
        var_y += dy * dy;
    }
    if var_x == 0.0 || var_y == 0.0 {
        return Ok(None);
    }
    // One square root of the product: rounding twice can push exact
    // correlations like 1.0 off by an ulp.
    let r = cov / (var_x * var_y).sqrt();
    if !r.is_finite() {
        return Ok(None);
    }
    Ok(Some(r.clamp(-1.0, 1.0)))
}

/// Connect series whose correlation strictly exceeds `tau`. Every id
/// becomes a node at its location; edges carry the correlation as both
/// weight and an `r` attribute. Series that can never correlate
/// (constant, or with fewer than two observations) stay isolated and
/// are named in the returned diagnostics.
///
/// `min_overlap` defaults to 10 when any observation is missing and to
/// the full series length otherwise.
pub fn correlation_network(
    ts: &TimeSeriesSet,
    tau: Threshold,
    min_overlap: Option<usize>,
) -> Result<(GeoGraph, Vec<String>)> {
    if tau.value() < -1.0 || tau.value() > 1.0 {
        return Err(Error::ThresholdOutOfRange(tau.value()));
    }
    let min_overlap = min_overlap.unwrap_or(if ts.has_missing() {
        10
    } else {
        ts.series_len()
    });

    let mut g = GeoGraph::new();
    let mut diagnostics = Vec::new();
    for (i, &id) in ts.ids().iter().enumerate() {
        g.add_node(id, ts.location_at(i), BTreeMap::new());
        let present: Vec<f64> = ts.series_at(i).iter().flatten().copied().collect();
        if present.len() < 2 {
            diagnostics.push(format!(
                "series {id}: fewer than 2 observations, correlations undefined"
            ));
        } else {
            let mean = present.iter().sum::<f64>() / present.len() as f64;
            if present.iter().all(|v| *v == mean) {
                diagnostics.push(format!(
                    "series {id}: zero variance, correlations undefined"
                ));
            }
        }
    }

    let n = ts.len();
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
        .collect();
    let computed: Vec<Result<Option<(usize, usize, f64)>>> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let r = pearson(ts.series_at(i), ts.series_at(j), min_overlap)?;
            Ok(r.filter(|&r| tau.exceeded_by(r)).map(|r| (i, j, r)))
        })
        .collect();
    for item in computed {
        if let Some((i, j, r)) = item? {
            let attrs = BTreeMap::from([("r".to_string(), AttrValue::Real(r))]);
            g.add_edge(ts.ids()[i], ts.ids()[j], r, attrs)?;
        }
    }
    Ok((g, diagnostics))
}

/// Connect zones whose summed two-way flow strictly exceeds `tau`.
/// Nodes sit at zone centroids and carry a `degree` attribute; edge
/// weight is the total number of people moving between the pair.
pub fn flow_network(od: &ODMatrix, tau: Threshold) -> Result<GeoGraph> {
    if tau.value() < 0.0 {
        return Err(Error::NegativeFlowThreshold(tau.value()));
    }
    let mut g = GeoGraph::new();
    for (i, &id) in od.zone_ids().iter().enumerate() {
        g.add_node(id, od.location_at(i), BTreeMap::new());
    }
    let ids = od.zone_ids();
    for (i, &u) in ids.iter().enumerate() {
        for &v in &ids[i + 1..] {
            let total = od.symmetrized(u, v);
            if tau.exceeded_by(total) {
                g.add_edge(u, v, total, BTreeMap::new())?;
            }
        }
    }
    metrics::attach_metrics(&g, &[metrics::degree(&g)])
}

/// Bind a point layer to an adjacency matrix: one node per point
/// (carrying every point attribute), one unit-weight edge per matrix 1.
/// Points and matrix are matched by the integer `id` field, not by
/// record order. Layers written by [`nodes_to_features`] keep their
/// node ids in a `node_id` column instead; that name is accepted as a
/// fallback so exported node layers re-ingest without editing. Because
/// `node_id` is reserved in graph documents, that column is never
/// copied onto nodes as an attribute; its value lives in the node id.
///
/// [`nodes_to_features`]: crate::export::nodes_to_features
pub fn graph_from_adjacency(points: &FeatureCollection, m: &AdjacencyMatrix) -> Result<GeoGraph> {
    if points.geometry_kind() != GeometryKind::Point {
        return Err(Error::GeometryKindMismatch { expected: "point" });
    }
    let schema = points.schema();
    let position_of = |name: &str| {
        schema
            .fields()
            .iter()
            .position(|f| f.name.eq_ignore_ascii_case(name) && f.kind == FieldKind::Integer)
    };
    let id_pos = position_of("id")
        .or_else(|| position_of("node_id"))
        .ok_or(Error::MissingIdField)?;

    let mut g = GeoGraph::new();
    for (record, feature) in points.features().iter().enumerate() {
        let id = feature.attributes[id_pos]
            .as_i64()
            .ok_or(Error::NullPointId(record))?;
        let location = match &feature.geometry {
            Some(Geometry::Point(p)) => *p,
            _ => return Err(Error::PointWithoutLocation(id)),
        };
        let attributes: BTreeMap<String, AttrValue> = schema
            .fields()
            .iter()
            .zip(&feature.attributes)
            .filter(|(f, _)| !f.name.eq_ignore_ascii_case("node_id"))
            .map(|(f, v)| (f.name.clone(), v.clone()))
            .collect();
        if g.contains_node(id) {
            return Err(Error::DuplicatePointId(id));
        }
        g.add_node(id, location, attributes);
    }

    let point_ids: BTreeSet<i64> = g.node_ids().collect();
    let matrix_ids: BTreeSet<i64> = m.ids().iter().copied().collect();
    if let Some(&missing) = matrix_ids.difference(&point_ids).next() {
        return Err(Error::MatrixIdNotInPoints(missing));
    }
    if let Some(&missing) = point_ids.difference(&matrix_ids).next() {
        return Err(Error::PointIdNotInMatrix(missing));
    }

    for (i, j) in m.pairs() {
        g.add_edge(m.ids()[i], m.ids()[j], 1.0, BTreeMap::new())?;
    }
    Ok(g)
}
