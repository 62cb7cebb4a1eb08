//! The geographic graph: nodes with known locations, undirected simple
//! edges with weights and attributes.
//!
//! Invariants enforced on construction: every edge endpoint exists, no
//! self-loops, at most one edge per unordered pair, finite weights.
//! Re-adding an existing pair replaces its weight and attributes.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::feature::AttrValue;
use crate::geometry::{BoundingBox, GeoPoint};

/// A graph node: location plus named attributes.
#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub location: GeoPoint,
    pub attributes: BTreeMap<String, AttrValue>,
}

/// An undirected edge payload.
#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub weight: f64,
    pub attributes: BTreeMap<String, AttrValue>,
}

/// Graph whose nodes carry geographic locations. Edges are stored once
/// under the ordered key (min id, max id).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GeoGraph {
    nodes: BTreeMap<i64, Node>,
    edges: BTreeMap<(i64, i64), Edge>,
}

impl GeoGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_node(
        &mut self,
        id: i64,
        location: GeoPoint,
        attributes: BTreeMap<String, AttrValue>,
    ) {
        self.nodes.insert(
            id,
            Node {
                location,
                attributes,
            },
        );
    }

    /// Insert or replace the undirected edge {u, v}.
    pub fn add_edge(
        &mut self,
        u: i64,
        v: i64,
        weight: f64,
        attributes: BTreeMap<String, AttrValue>,
    ) -> Result<()> {
        if u == v {
            return Err(Error::SelfLoop(u));
        }
        if !self.nodes.contains_key(&u) {
            return Err(Error::UnknownNode(u));
        }
        if !self.nodes.contains_key(&v) {
            return Err(Error::UnknownNode(v));
        }
        if !weight.is_finite() {
            return Err(Error::NonFiniteWeight);
        }
        let key = if u < v { (u, v) } else { (v, u) };
        self.edges.insert(key, Edge { weight, attributes });
        Ok(())
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn node(&self, id: i64) -> Option<&Node> {
        self.nodes.get(&id)
    }

    pub fn node_mut(&mut self, id: i64) -> Option<&mut Node> {
        self.nodes.get_mut(&id)
    }

    pub fn contains_node(&self, id: i64) -> bool {
        self.nodes.contains_key(&id)
    }

    pub fn edge(&self, u: i64, v: i64) -> Option<&Edge> {
        let key = if u < v { (u, v) } else { (v, u) };
        self.edges.get(&key)
    }

    /// Node ids in ascending order.
    pub fn node_ids(&self) -> impl Iterator<Item = i64> + '_ {
        self.nodes.keys().copied()
    }

    pub fn nodes(&self) -> impl Iterator<Item = (i64, &Node)> {
        self.nodes.iter().map(|(id, n)| (*id, n))
    }

    /// Edges in ascending (u, v) order with u < v.
    pub fn edges(&self) -> impl Iterator<Item = (i64, i64, &Edge)> {
        self.edges.iter().map(|((u, v), e)| (*u, *v, e))
    }

    /// Neighbors of `id` in ascending order.
    pub fn neighbors(&self, id: i64) -> Vec<i64> {
        let mut out: Vec<i64> = self
            .edges
            .keys()
            .filter_map(|&(u, v)| {
                if u == id {
                    Some(v)
                } else if v == id {
                    Some(u)
                } else {
                    None
                }
            })
            .collect();
        out.sort_unstable();
        out
    }

    /// Componentwise min/max over node locations. Errors on an empty graph.
    pub fn bbox(&self) -> Result<BoundingBox> {
        let mut nodes = self.nodes.values();
        let first = nodes.next().ok_or(Error::EmptyGraph)?;
        let mut bbox = BoundingBox::of_point(&first.location);
        for n in nodes {
            bbox.include(&n.location);
        }
        Ok(bbox)
    }

    /// Extract the 0/1 adjacency matrix bound to the given id order.
    pub fn adjacency_matrix(&self, ids: &[i64]) -> Result<AdjacencyMatrix> {
        for &id in ids {
            if !self.nodes.contains_key(&id) {
                return Err(Error::UnknownNode(id));
            }
        }
        let n = ids.len();
        let mut entries = vec![0u8; n * n];
        for (i, &u) in ids.iter().enumerate() {
            for (j, &v) in ids.iter().enumerate() {
                if i != j && self.edge(u, v).is_some() {
                    entries[i * n + j] = 1;
                }
            }
        }
        AdjacencyMatrix::validate_u8(entries, ids.to_vec())
    }
}

/// Validated symmetric 0/1 matrix with a zero diagonal, bound to an
/// ordered list of distinct integer node ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdjacencyMatrix {
    n: usize,
    entries: Vec<u8>,
    ids: Vec<i64>,
}

impl AdjacencyMatrix {
    /// Validate raw rows of real values. Rejects non-square input, values
    /// outside {0, 1}, asymmetry, a nonzero diagonal and duplicate ids,
    /// naming the first violated cell in row-major scan order.
    pub fn validate(rows: &[Vec<f64>], ids: Vec<i64>) -> Result<Self> {
        let n = rows.len();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::NonSquareMatrix {
                    row: i,
                    got: row.len(),
                    expected: n,
                });
            }
        }
        let mut entries = vec![0u8; n * n];
        for (i, row) in rows.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if v == 0.0 {
                    entries[i * n + j] = 0;
                } else if v == 1.0 {
                    entries[i * n + j] = 1;
                } else {
                    return Err(Error::MatrixEntryOutOfRange {
                        row: i,
                        col: j,
                        value: v,
                    });
                }
            }
        }
        Self::validate_u8(entries, ids)
    }

    /// Validate pre-digitized 0/1 entries in row-major order.
    pub fn validate_u8(entries: Vec<u8>, ids: Vec<i64>) -> Result<Self> {
        let n = ids.len();
        if entries.len() != n * n {
            let got = entries.len().checked_div(n).unwrap_or(entries.len());
            return Err(Error::NonSquareMatrix {
                row: 0,
                got,
                expected: n,
            });
        }
        let mut seen = std::collections::BTreeSet::new();
        for &id in &ids {
            if !seen.insert(id) {
                return Err(Error::DuplicateMatrixId(id));
            }
        }
        for i in 0..n {
            for j in 0..n {
                let v = entries[i * n + j];
                if v > 1 {
                    return Err(Error::MatrixEntryOutOfRange {
                        row: i,
                        col: j,
                        value: v as f64,
                    });
                }
                if i == j && v != 0 {
                    return Err(Error::NonzeroDiagonal(i));
                }
                let mirror = entries[j * n + i];
                if v != mirror {
                    return Err(Error::AsymmetricMatrix {
                        row: i,
                        col: j,
                        value: v,
                        mirror,
                    });
                }
            }
        }
        Ok(AdjacencyMatrix { n, entries, ids })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn ids(&self) -> &[i64] {
        &self.ids
    }

    pub fn entry(&self, i: usize, j: usize) -> u8 {
        self.entries[i * self.n + j]
    }

    /// Unordered connected pairs as (row, col) with row < col.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n).flat_map(move |i| {
            ((i + 1)..self.n).filter_map(move |j| (self.entry(i, j) == 1).then_some((i, j)))
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph_with_nodes(ids: &[i64]) -> GeoGraph {
        let mut g = GeoGraph::new();
        for &id in ids {
            g.add_node(
                id,
                GeoPoint::new(id as f64, 0.0).unwrap(),
                BTreeMap::new(),
            );
        }
        g
    }

    #[test]
    fn add_edge_minimal() {
        let mut g = graph_with_nodes(&[1, 2]);
        g.add_edge(1, 2, 1.0, BTreeMap::new()).unwrap();
        assert_eq!(g.edge_count(), 1);
    }

    #[test]
    fn undirected_dedup() {
        let mut g = graph_with_nodes(&[1, 2]);
        g.add_edge(1, 2, 1.0, BTreeMap::new()).unwrap();
        g.add_edge(2, 1, 3.0, BTreeMap::new()).unwrap();
        assert_eq!(g.edge_count(), 1);
        // Last write wins.
        assert_eq!(g.edge(1, 2).unwrap().weight, 3.0);
    }

    #[test]
    fn self_loop_rejected() {
        let mut g = graph_with_nodes(&[1]);
        assert!(matches!(
            g.add_edge(1, 1, 1.0, BTreeMap::new()),
            Err(Error::SelfLoop(1))
        ));
    }

    #[test]
    fn unknown_endpoint_rejected() {
        let mut g = graph_with_nodes(&[1]);
        assert!(matches!(
            g.add_edge(1, 9, 1.0, BTreeMap::new()),
            Err(Error::UnknownNode(9))
        ));
    }

    #[test]
    fn bbox_componentwise() {
        let mut g = GeoGraph::new();
        g.add_node(0, GeoPoint::new(-1.0, 4.0).unwrap(), BTreeMap::new());
        g.add_node(1, GeoPoint::new(3.0, -2.0).unwrap(), BTreeMap::new());
        g.add_node(2, GeoPoint::new(0.0, 0.0).unwrap(), BTreeMap::new());
        let b = g.bbox().unwrap();
        assert_eq!((b.min_x, b.min_y, b.max_x, b.max_y), (-1.0, -2.0, 3.0, 4.0));
    }

    #[test]
    fn bbox_single_node_degenerate() {
        let mut g = GeoGraph::new();
        g.add_node(7, GeoPoint::new(5.0, 5.0).unwrap(), BTreeMap::new());
        let b = g.bbox().unwrap();
        assert_eq!((b.min_x, b.min_y, b.max_x, b.max_y), (5.0, 5.0, 5.0, 5.0));
    }

    #[test]
    fn bbox_empty_graph_errors() {
        assert!(matches!(GeoGraph::new().bbox(), Err(Error::EmptyGraph)));
    }

    #[test]
    fn adjacency_valid() {
        let m =
            AdjacencyMatrix::validate(&[vec![0.0, 1.0], vec![1.0, 0.0]], vec![10, 20]).unwrap();
        assert_eq!(m.n(), 2);
        assert_eq!(m.entry(0, 1), 1);
    }

    #[test]
    fn adjacency_asymmetry_names_cells() {
        let err = AdjacencyMatrix::validate(&[vec![0.0, 1.0], vec![0.0, 0.0]], vec![1, 2])
            .unwrap_err();
        match err {
            Error::AsymmetricMatrix {
                row, col, value, mirror,
            } => {
                assert_eq!((row, col), (0, 1));
                assert_eq!((value, mirror), (1, 0));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn adjacency_nonzero_diagonal() {
        assert!(matches!(
            AdjacencyMatrix::validate(&[vec![1.0]], vec![1]),
            Err(Error::NonzeroDiagonal(0))
        ));
    }

    #[test]
    fn adjacency_rejects_out_of_range_and_duplicates() {
        assert!(matches!(
            AdjacencyMatrix::validate(&[vec![0.0, 2.0], vec![2.0, 0.0]], vec![1, 2]),
            Err(Error::MatrixEntryOutOfRange { row: 0, col: 1, .. })
        ));
        assert!(matches!(
            AdjacencyMatrix::validate(&[vec![0.0, 1.0], vec![1.0, 0.0]], vec![5, 5]),
            Err(Error::DuplicateMatrixId(5))
        ));
        assert!(matches!(
            AdjacencyMatrix::validate(&[vec![0.0, 1.0]], vec![1, 2]),
            Err(Error::NonSquareMatrix { .. })
        ));
    }

    #[test]
    fn adjacency_roundtrip_through_graph() {
        let mut g = graph_with_nodes(&[10, 20, 30]);
        g.add_edge(10, 20, 1.0, BTreeMap::new()).unwrap();
        g.add_edge(20, 30, 1.0, BTreeMap::new()).unwrap();
        let m = g.adjacency_matrix(&[30, 10, 20]).unwrap();
        assert_eq!(m.entry(0, 2), 1); // 30-20
        assert_eq!(m.entry(0, 1), 0); // 30-10
        assert_eq!(m.entry(1, 2), 1); // 10-20
    }
}
