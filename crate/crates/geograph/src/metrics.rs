//! Node metrics: degree, clustering coefficient, single-source shortest
//! paths, and betweenness centrality.
//!
//! Betweenness follows Brandes' accumulation with the undirected
//! convention: every unordered pair {s, t} counts once, so the sum over
//! all sources is halved at the end. Results are bitwise reproducible
//! for any worker count: sources are processed in fixed 64-source
//! chunks, each chunk accumulates sequentially in ascending source
//! order, and the per-chunk partials are folded left-to-right.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap, VecDeque};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::feature::AttrValue;
use crate::graph::GeoGraph;

/// One named value per node, e.g. every node's degree.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricVector {
    name: String,
    values: BTreeMap<i64, f64>,
}

impl MetricVector {
    pub fn new(name: &str, values: BTreeMap<i64, f64>) -> Result<Self> {
        for (&node, &v) in &values {
            if !v.is_finite() {
                return Err(Error::NonFiniteMetric {
                    metric: name.to_string(),
                    node,
                });
            }
        }
        Ok(MetricVector {
            name: name.to_string(),
            values,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn values(&self) -> &BTreeMap<i64, f64> {
        &self.values
    }

    pub fn get(&self, node: i64) -> Option<f64> {
        self.values.get(&node).copied()
    }
}

/// Distances and shortest-path counts from one source.
#[derive(Debug, Clone, PartialEq)]
pub struct ShortestPaths {
    pub source: i64,
    /// None marks a node the source cannot reach.
    pub dist: BTreeMap<i64, Option<f64>>,
    /// Number of distinct shortest paths from the source (Brandes' σ);
    /// 0 for unreachable nodes, 1 for the source itself.
    pub path_counts: BTreeMap<i64, f64>,
}

/// Compressed adjacency held in ascending node-id order: node index i
/// is the i-th smallest id, and each neighbor run is sorted.
struct Csr {
    ids: Vec<i64>,
    offsets: Vec<u32>,
    neighbors: Vec<u32>,
    weights: Vec<f64>,
}

impl Csr {
    fn build(g: &GeoGraph) -> Csr {
        let ids: Vec<i64> = g.node_ids().collect();
        let index_of = |id: i64| -> u32 { ids.binary_search(&id).unwrap() as u32 };

        let n = ids.len();
        let mut degree = vec![0u32; n];
        for (u, v, _) in g.edges() {
            degree[index_of(u) as usize] += 1;
            degree[index_of(v) as usize] += 1;
        }
        let mut offsets = vec![0u32; n + 1];
        for i in 0..n {
            offsets[i + 1] = offsets[i] + degree[i];
        }
        let mut neighbors = vec![0u32; offsets[n] as usize];
        let mut weights = vec![0.0f64; offsets[n] as usize];
        let mut fill = offsets.clone();
        // BTreeMap edge order is ascending (u, v), so each row comes out
        // sorted without an extra pass.
        for (u, v, e) in g.edges() {
            let (iu, iv) = (index_of(u), index_of(v));
            for (from, to) in [(iu, iv), (iv, iu)] {
                let slot = fill[from as usize] as usize;
                neighbors[slot] = to;
                weights[slot] = e.weight;
                fill[from as usize] += 1;
            }
        }
        Csr {
            ids,
            offsets,
            neighbors,
            weights,
        }
    }

    fn len(&self) -> usize {
        self.ids.len()
    }

    fn row(&self, i: u32) -> std::ops::Range<usize> {
        self.offsets[i as usize] as usize..self.offsets[i as usize + 1] as usize
    }

    /// First edge with a nonpositive weight, in ascending (u, v) order.
    fn check_positive_weights(&self, g: &GeoGraph) -> Result<()> {
        for (u, v, e) in g.edges() {
            if e.weight <= 0.0 {
                return Err(Error::NonpositiveWeight {
                    u,
                    v,
                    weight: e.weight,
                });
            }
        }
        Ok(())
    }
}

/// Per-source scratch buffers, reused across the sources of one chunk.
struct Scratch {
    dist: Vec<f64>,
    sigma: Vec<f64>,
    delta: Vec<f64>,
    /// Settle order; reverse iteration gives non-increasing distance.
    stack: Vec<u32>,
    queue: VecDeque<u32>,
    heap: BinaryHeap<HeapEntry>,
}

impl Scratch {
    fn new(n: usize) -> Scratch {
        Scratch {
            dist: vec![f64::INFINITY; n],
            sigma: vec![0.0; n],
            delta: vec![0.0; n],
            stack: Vec::with_capacity(n),
            queue: VecDeque::new(),
            heap: BinaryHeap::new(),
        }
    }

    fn reset(&mut self) {
        self.dist.fill(f64::INFINITY);
        self.sigma.fill(0.0);
        self.delta.fill(0.0);
        self.stack.clear();
        self.queue.clear();
        self.heap.clear();
    }
}

/// Min-entry for the weighted traversal; ties broken by node index so
/// the pop order is a total order.
struct HeapEntry {
    dist: f64,
    node: u32,
}

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for HeapEntry {}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // Reversed: BinaryHeap is a max-heap, we want the smallest
        // distance (then smallest node) on top.
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.node.cmp(&self.node))
    }
}

/// Breadth-first traversal from `source`, filling dist (in hops), sigma,
/// and the settle order.
fn bfs(csr: &Csr, source: u32, s: &mut Scratch) {
    s.reset();
    s.dist[source as usize] = 0.0;
    s.sigma[source as usize] = 1.0;
    s.queue.push_back(source);
    while let Some(v) = s.queue.pop_front() {
        s.stack.push(v);
        let dv = s.dist[v as usize];
        for e in csr.row(v) {
            let w = csr.neighbors[e];
            let nd = dv + 1.0;
            if s.dist[w as usize].is_infinite() {
                s.dist[w as usize] = nd;
                s.queue.push_back(w);
            }
            if s.dist[w as usize] == nd {
                s.sigma[w as usize] += s.sigma[v as usize];
            }
        }
    }
}

/// Positive-weight traversal from `source`. With strictly positive
/// weights every node settles at its first pop, after all contributors
/// to its path count have settled, so sigma is final when read.
fn dijkstra(csr: &Csr, source: u32, s: &mut Scratch) {
    s.reset();
    s.dist[source as usize] = 0.0;
    s.sigma[source as usize] = 1.0;
    s.heap.push(HeapEntry {
        dist: 0.0,
        node: source,
    });
    while let Some(HeapEntry { dist, node: v }) = s.heap.pop() {
        if dist > s.dist[v as usize] {
            continue; // Stale entry superseded by a shorter route.
        }
        s.stack.push(v);
        for e in csr.row(v) {
            let w = csr.neighbors[e];
            let nd = s.dist[v as usize] + csr.weights[e];
            if nd < s.dist[w as usize] {
                s.dist[w as usize] = nd;
                s.sigma[w as usize] = s.sigma[v as usize];
                s.heap.push(HeapEntry { dist: nd, node: w });
            } else if nd == s.dist[w as usize] {
                s.sigma[w as usize] += s.sigma[v as usize];
            }
        }
    }
}

/// Brandes' reverse accumulation for one settled source: walk the
/// settle order backwards and push dependencies down shortest-path
/// predecessor links, recognized by exact distance arithmetic. The
/// equality test reuses the expression the traversal itself evaluated,
/// so rounding cannot disagree.
fn accumulate(csr: &Csr, source: u32, s: &mut Scratch, weighted: bool, into: &mut [f64]) {
    for &w in s.stack.iter().rev() {
        let coeff = (1.0 + s.delta[w as usize]) / s.sigma[w as usize];
        for e in csr.row(w) {
            let v = csr.neighbors[e];
            let step = if weighted { csr.weights[e] } else { 1.0 };
            if s.dist[v as usize] + step == s.dist[w as usize] {
                s.delta[v as usize] += s.sigma[v as usize] * coeff;
            }
        }
        if w != source {
            into[w as usize] += s.delta[w as usize];
        }
    }
}

/// Sources per work unit. Fixed so the reduction tree, and therefore
/// every floating-point sum, is identical for any worker count.
const SOURCE_CHUNK: usize = 64;

fn betweenness_impl(g: &GeoGraph, normalized: bool, weighted: bool) -> Result<MetricVector> {
    let csr = Csr::build(g);
    let n = csr.len();
    if weighted {
        csr.check_positive_weights(g)?;
    }

    let sources: Vec<u32> = (0..n as u32).collect();
    let partials: Vec<Vec<f64>> = sources
        .par_chunks(SOURCE_CHUNK)
        .map(|chunk| {
            let mut scratch = Scratch::new(n);
            let mut acc = vec![0.0f64; n];
            for &source in chunk {
                if weighted {
                    dijkstra(&csr, source, &mut scratch);
                } else {
                    bfs(&csr, source, &mut scratch);
                }
                accumulate(&csr, source, &mut scratch, weighted, &mut acc);
            }
            acc
        })
        .collect();

    let mut raw = vec![0.0f64; n];
    for partial in &partials {
        for (slot, value) in raw.iter_mut().zip(partial) {
            *slot += value;
        }
    }

    // Each unordered pair was seen from both endpoints.
    for v in raw.iter_mut() {
        *v /= 2.0;
    }
    if normalized {
        let pairs = if n >= 3 {
            ((n - 1) * (n - 2)) as f64 / 2.0
        } else {
            0.0
        };
        for v in raw.iter_mut() {
            *v = if pairs > 0.0 { *v / pairs } else { 0.0 };
        }
    }

    let values: BTreeMap<i64, f64> = csr.ids.iter().copied().zip(raw).collect();
    MetricVector::new("betweenness", values)
}

/// Betweenness centrality over unordered node pairs.
pub fn betweenness(g: &GeoGraph, normalized: bool, weighted: bool) -> Result<MetricVector> {
    betweenness_impl(g, normalized, weighted)
}

/// Betweenness on a dedicated pool of `threads` workers. The result is
/// bitwise identical to every other worker count, including 1.
pub fn betweenness_with_threads(
    g: &GeoGraph,
    normalized: bool,
    weighted: bool,
    threads: usize,
) -> Result<MetricVector> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::Internal(format!("worker pool: {e}")))?;
    pool.install(|| betweenness_impl(g, normalized, weighted))
}

/// Number of incident edges per node.
pub fn degree(g: &GeoGraph) -> MetricVector {
    let csr = Csr::build(g);
    let values = csr
        .ids
        .iter()
        .enumerate()
        .map(|(i, &id)| (id, csr.row(i as u32).len() as f64))
        .collect();
    MetricVector {
        name: "degree".to_string(),
        values,
    }
}

/// Watts-Strogatz local clustering: closed triples over possible
/// triples at each node; nodes of degree < 2 score 0.
pub fn clustering_coefficient(g: &GeoGraph) -> MetricVector {
    let csr = Csr::build(g);
    let n = csr.len();
    let mut values = BTreeMap::new();
    for i in 0..n as u32 {
        let row = &csr.neighbors[csr.row(i)];
        let k = row.len();
        if k < 2 {
            values.insert(csr.ids[i as usize], 0.0);
            continue;
        }
        let mut closed = 0u64;
        for (a, &u) in row.iter().enumerate() {
            let urow = &csr.neighbors[csr.row(u)];
            for &v in &row[a + 1..] {
                if urow.binary_search(&v).is_ok() {
                    closed += 1;
                }
            }
        }
        let coeff = 2.0 * closed as f64 / (k * (k - 1)) as f64;
        values.insert(csr.ids[i as usize], coeff);
    }
    MetricVector {
        name: "clustering".to_string(),
        values,
    }
}

/// Distances and path counts from a single source.
pub fn shortest_paths(g: &GeoGraph, source: i64, weighted: bool) -> Result<ShortestPaths> {
    if !g.contains_node(source) {
        return Err(Error::UnknownNode(source));
    }
    let csr = Csr::build(g);
    if weighted {
        csr.check_positive_weights(g)?;
    }
    let src = csr.ids.binary_search(&source).unwrap() as u32;
    let mut scratch = Scratch::new(csr.len());
    if weighted {
        dijkstra(&csr, src, &mut scratch);
    } else {
        bfs(&csr, src, &mut scratch);
    }
    let mut dist = BTreeMap::new();
    let mut path_counts = BTreeMap::new();
    for (i, &id) in csr.ids.iter().enumerate() {
        let d = scratch.dist[i];
        dist.insert(id, d.is_finite().then_some(d));
        path_counts.insert(id, scratch.sigma[i]);
    }
    Ok(ShortestPaths {
        source,
        dist,
        path_counts,
    })
}

/// Copy metric values onto the graph as real-valued node attributes.
/// Every vector must cover exactly the graph's nodes.
pub fn attach_metrics(g: &GeoGraph, vectors: &[MetricVector]) -> Result<GeoGraph> {
    for vector in vectors {
        for id in g.node_ids() {
            if vector.get(id).is_none() {
                return Err(Error::MetricCoverageMismatch {
                    metric: vector.name.clone(),
                    node: id,
                });
            }
        }
        if let Some((&extra, _)) = vector.values.iter().find(|(id, _)| !g.contains_node(**id)) {
            return Err(Error::MetricCoverageMismatch {
                metric: vector.name.clone(),
                node: extra,
            });
        }
    }
    let mut out = g.clone();
    for vector in vectors {
        for (&id, &value) in &vector.values {
            out.node_mut(id)
                .expect("coverage checked above")
                .attributes
                .insert(vector.name.clone(), AttrValue::Real(value));
        }
    }
    Ok(out)
}
