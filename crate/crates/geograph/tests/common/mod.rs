//! Shared generators and independent oracles for the integration
//! suites.
//!
//! The oracles reimplement their answers from first principles
//! (exhaustive path enumeration, all-pairs distance scans with their
//! own segment arithmetic) so a library regression cannot hide behind
//! shared code paths.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use geograph::{
    AttrValue, ConnectionMode, CoordMode, Feature, FeatureCollection, FieldDef, FieldKind,
    FieldSchema, GeoGraph, GeoPoint, Geometry, GeometryKind, PolyLine,
};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// ---------------------------------------------------------------- graphs

/// Erdos-Renyi style random graph on ids 0..n. Weights are dyadic
/// (k/8), so path costs sum exactly in any order and tie detection
/// cannot diverge between implementations.
pub fn random_graph(rng: &mut ChaCha8Rng, n: usize, p: f64) -> GeoGraph {
    let mut g = GeoGraph::new();
    for id in 0..n as i64 {
        let x = rng.gen_range(-100.0..100.0);
        let y = rng.gen_range(-100.0..100.0);
        g.add_node(id, GeoPoint::new(x, y).unwrap(), BTreeMap::new());
    }
    for u in 0..n as i64 {
        for v in (u + 1)..n as i64 {
            if rng.gen::<f64>() < p {
                let w = rng.gen_range(1..=64) as f64 / 8.0;
                g.add_edge(u, v, w, BTreeMap::new()).unwrap();
            }
        }
    }
    g
}

/// Betweenness by exhaustive simple-path enumeration. Viable for the
/// small graphs the equivalence checks use (n <= 8 or so).
pub fn oracle_betweenness(g: &GeoGraph, weighted: bool) -> BTreeMap<i64, f64> {
    let ids: Vec<i64> = g.node_ids().collect();
    let pos: BTreeMap<i64, usize> = ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();
    let mut adjacency = vec![Vec::new(); ids.len()];
    for (u, v, e) in g.edges() {
        let w = if weighted { e.weight } else { 1.0 };
        adjacency[pos[&u]].push((pos[&v], w));
        adjacency[pos[&v]].push((pos[&u], w));
    }

    let mut score = vec![0.0f64; ids.len()];
    for s in 0..ids.len() {
        for t in (s + 1)..ids.len() {
            let paths = all_simple_paths(&adjacency, s, t);
            let best = paths
                .iter()
                .map(|(cost, _)| *cost)
                .fold(f64::INFINITY, f64::min);
            if !best.is_finite() {
                continue;
            }
            let shortest: Vec<&Vec<usize>> = paths
                .iter()
                .filter(|(cost, _)| *cost == best)
                .map(|(_, path)| path)
                .collect();
            let sigma = shortest.len() as f64;
            for path in shortest {
                for &v in &path[1..path.len() - 1] {
                    score[v] += 1.0 / sigma;
                }
            }
        }
    }
    ids.iter()
        .enumerate()
        .map(|(i, &id)| (id, score[i]))
        .collect()
}

/// Every simple path from s to t with its cost, by depth-first search.
fn all_simple_paths(adjacency: &[Vec<(usize, f64)>], s: usize, t: usize) -> Vec<(f64, Vec<usize>)> {
    let mut out = Vec::new();
    let mut path = vec![s];
    let mut visited = vec![false; adjacency.len()];
    visited[s] = true;
    walk(adjacency, t, &mut path, &mut visited, 0.0, &mut out);
    out
}

fn walk(
    adjacency: &[Vec<(usize, f64)>],
    t: usize,
    path: &mut Vec<usize>,
    visited: &mut Vec<bool>,
    cost: f64,
    out: &mut Vec<(f64, Vec<usize>)>,
) {
    let here = *path.last().unwrap();
    if here == t {
        out.push((cost, path.clone()));
        return;
    }
    for &(next, w) in &adjacency[here] {
        if !visited[next] {
            visited[next] = true;
            path.push(next);
            walk(adjacency, t, path, visited, cost + w, out);
            path.pop();
            visited[next] = false;
        }
    }
}

// ----------------------------------------------------- segment distances

/// Orientation sign of the triangle a-b-c.
fn orient(a: GeoPoint, b: GeoPoint, c: GeoPoint) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

fn on_segment(a: GeoPoint, b: GeoPoint, p: GeoPoint) -> bool {
    p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

/// Segment intersection by the classic orientation test (a different
/// derivation than a parametric solver).
fn segments_meet(a1: GeoPoint, a2: GeoPoint, b1: GeoPoint, b2: GeoPoint) -> bool {
    let d1 = orient(a1, a2, b1);
    let d2 = orient(a1, a2, b2);
    let d3 = orient(b1, b2, a1);
    let d4 = orient(b1, b2, a2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment(a1, a2, b1))
        || (d2 == 0.0 && on_segment(a1, a2, b2))
        || (d3 == 0.0 && on_segment(b1, b2, a1))
        || (d4 == 0.0 && on_segment(b1, b2, a2))
}

pub fn point_to_segment(p: GeoPoint, a: GeoPoint, b: GeoPoint) -> f64 {
    let dx = b.x - a.x;
    let dy = b.y - a.y;
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 {
        (((p.x - a.x) * dx + (p.y - a.y) * dy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    ((p.x - (a.x + t * dx)).powi(2) + (p.y - (a.y + t * dy)).powi(2)).sqrt()
}

fn segment_to_segment(a1: GeoPoint, a2: GeoPoint, b1: GeoPoint, b2: GeoPoint) -> f64 {
    if segments_meet(a1, a2, b1, b2) {
        return 0.0;
    }
    point_to_segment(a1, b1, b2)
        .min(point_to_segment(a2, b1, b2))
        .min(point_to_segment(b1, a1, a2))
        .min(point_to_segment(b2, a1, a2))
}

fn feature_segments(feature: &Feature) -> Vec<(GeoPoint, GeoPoint)> {
    match &feature.geometry {
        Some(Geometry::PolyLine(line)) => line.segments().map(|(_, _, a, b)| (*a, *b)).collect(),
        _ => Vec::new(),
    }
}

fn feature_part_endpoints(feature: &Feature) -> Vec<GeoPoint> {
    match &feature.geometry {
        Some(Geometry::PolyLine(line)) => line
            .parts()
            .iter()
            .flat_map(|part| [part[0], *part.last().unwrap()])
            .collect(),
        _ => Vec::new(),
    }
}

/// All connected feature pairs by the O(n^2) definition: geometric mode
/// connects features whose segments come within `tol`; endpoint mode
/// requires a part endpoint of one feature within `tol` of the other.
pub fn oracle_connections(
    c: &FeatureCollection,
    tol: f64,
    mode: ConnectionMode,
) -> BTreeSet<(usize, usize)> {
    let segments: Vec<Vec<(GeoPoint, GeoPoint)>> =
        c.features().iter().map(feature_segments).collect();
    let endpoints: Vec<Vec<GeoPoint>> = c.features().iter().map(feature_part_endpoints).collect();

    let mut pairs = BTreeSet::new();
    for i in 0..c.features().len() {
        for j in (i + 1)..c.features().len() {
            let hit = match mode {
                ConnectionMode::Geometric => segments[i].iter().any(|&(a1, a2)| {
                    segments[j]
                        .iter()
                        .any(|&(b1, b2)| segment_to_segment(a1, a2, b1, b2) <= tol)
                }),
                ConnectionMode::Endpoint => {
                    let near = |points: &[GeoPoint], segs: &[(GeoPoint, GeoPoint)]| {
                        points.iter().any(|&p| {
                            segs.iter().any(|&(a, b)| point_to_segment(p, a, b) <= tol)
                        })
                    };
                    near(&endpoints[i], &segments[j]) || near(&endpoints[j], &segments[i])
                }
            };
            if hit {
                pairs.insert((i, j));
            }
        }
    }
    pairs
}

// --------------------------------------------------------- collections

/// Random polyline collection in a 10 x 10 area: features are close
/// enough together that crossings and near misses both actually occur.
pub fn random_polyline_collection(rng: &mut ChaCha8Rng, max_features: usize) -> FeatureCollection {
    let schema = FieldSchema::new(vec![FieldDef::new("id", FieldKind::Integer, 10, 0)]).unwrap();
    let mut c = FeatureCollection::new(schema, GeometryKind::PolyLine, CoordMode::Planar);
    let features = rng.gen_range(2..=max_features);
    for fi in 0..features {
        let parts = (0..rng.gen_range(1..=2))
            .map(|_| {
                let len = rng.gen_range(2..=5);
                let mut x = rng.gen_range(0.0..10.0);
                let mut y = rng.gen_range(0.0..10.0);
                (0..len)
                    .map(|_| {
                        x += rng.gen_range(-1.5..1.5);
                        y += rng.gen_range(-1.5..1.5);
                        GeoPoint::new(x, y).unwrap()
                    })
                    .collect()
            })
            .collect();
        c.push(Feature {
            geometry: Some(Geometry::PolyLine(PolyLine::new(parts).unwrap())),
            attributes: vec![AttrValue::Integer(fi as i64)],
        })
        .unwrap();
    }
    c
}

const TEXT_ALPHABET: &[u8] = b"abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789";

fn random_text(rng: &mut ChaCha8Rng, max_len: usize) -> String {
    let len = rng.gen_range(1..=max_len);
    (0..len)
        .map(|_| *TEXT_ALPHABET.choose(rng).unwrap() as char)
        .collect()
}

/// A schema of 1..=5 fields with unique names and mixed kinds. Real
/// fields declare two decimals so their kind survives a table cycle.
pub fn random_schema(rng: &mut ChaCha8Rng) -> FieldSchema {
    let count = rng.gen_range(1..=5);
    let fields = (0..count)
        .map(|i| {
            let name = format!("f{i}_{}", random_text(rng, 4).to_lowercase());
            match rng.gen_range(0..4) {
                0 => FieldDef::new(name, FieldKind::Integer, 10, 0),
                1 => FieldDef::new(name, FieldKind::Real, 12, 2),
                2 => FieldDef::new(name, FieldKind::Text, 8, 0),
                _ => FieldDef::new(name, FieldKind::Logical, 1, 0),
            }
        })
        .collect();
    FieldSchema::new(fields).unwrap()
}

/// A value that survives table formatting unchanged: integers within
/// width, reals on the declared decimal grid, text without padding
/// ambiguity. One in ten cells is null.
fn random_value(rng: &mut ChaCha8Rng, field: &FieldDef) -> AttrValue {
    if rng.gen_range(0..10) == 0 {
        return AttrValue::Null;
    }
    match field.kind {
        FieldKind::Integer => AttrValue::Integer(rng.gen_range(-100_000_000..=100_000_000)),
        FieldKind::Real => AttrValue::Real(rng.gen_range(-1_000_000i64..=1_000_000) as f64 / 100.0),
        FieldKind::Text => AttrValue::Text(random_text(rng, field.width as usize)),
        FieldKind::Logical => AttrValue::Logical(rng.gen()),
    }
}

fn random_point(rng: &mut ChaCha8Rng) -> GeoPoint {
    GeoPoint::new(rng.gen_range(-1e6..1e6), rng.gen_range(-1e6..1e6)).unwrap()
}

/// Random collection of either kind: random schema, random attributes,
/// and one null geometry in twelve.
pub fn random_collection(rng: &mut ChaCha8Rng, features: usize) -> FeatureCollection {
    let schema = random_schema(rng);
    let kind = if rng.gen() {
        GeometryKind::Point
    } else {
        GeometryKind::PolyLine
    };
    let mut c = FeatureCollection::new(schema.clone(), kind, CoordMode::Planar);
    for _ in 0..features {
        let geometry = if rng.gen_range(0..12) == 0 {
            None
        } else {
            Some(match kind {
                GeometryKind::Point => Geometry::Point(random_point(rng)),
                GeometryKind::PolyLine => {
                    let parts = (0..rng.gen_range(1..=3))
                        .map(|_| (0..rng.gen_range(2..=4)).map(|_| random_point(rng)).collect())
                        .collect();
                    Geometry::PolyLine(PolyLine::new(parts).unwrap())
                }
            })
        };
        let attributes = schema.fields().iter().map(|f| random_value(rng, f)).collect();
        c.push(Feature {
            geometry,
            attributes,
        })
        .unwrap();
    }
    c
}

// ------------------------------------------------------------ analysis

/// Connected components by repeated flooding; returns each node's
/// component label.
pub fn components(g: &GeoGraph) -> BTreeMap<i64, usize> {
    let mut label: BTreeMap<i64, usize> = BTreeMap::new();
    let mut next = 0;
    for start in g.node_ids() {
        if label.contains_key(&start) {
            continue;
        }
        let mut queue = vec![start];
        label.insert(start, next);
        while let Some(u) = queue.pop() {
            for v in g.neighbors(u) {
                if let std::collections::btree_map::Entry::Vacant(slot) = label.entry(v) {
                    slot.insert(next);
                    queue.push(v);
                }
            }
        }
        next += 1;
    }
    label
}
