//! Undirected simple labeled graphs with per-node provider types.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeType {
    Primary,
    Specialty,
    Untyped,
}

/// An undirected simple graph on `n >= 1` labeled vertices.
///
/// Edges are stored canonically as `(i, j)` with `i < j`, sorted
/// lexicographically; adjacency lists are sorted. The graph is immutable once
/// built.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    node_ids: Vec<String>,
    node_types: Vec<NodeType>,
    edges: Vec<(u32, u32)>,
    adjacency: Vec<Vec<u32>>,
}

impl Graph {
    /// Validates and canonicalizes. Edge endpoints may be given in either order;
    /// self-loops, duplicates and out-of-range indices are rejected.
    pub fn new(
        node_ids: Vec<String>,
        node_types: Vec<NodeType>,
        edges: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        let n = node_ids.len();
        if n == 0 {
            return Err(Error::InvalidGraph("a graph needs at least one node".into()));
        }
        if n > u32::MAX as usize {
            return Err(Error::InvalidGraph("too many nodes".into()));
        }
        if node_types.len() != n {
            return Err(Error::InvalidGraph(format!(
                "{} node types given for {} nodes",
                node_types.len(),
                n
            )));
        }
        let mut canon = Vec::new();
        for (a, b) in edges {
            if a >= n || b >= n {
                return Err(Error::InvalidGraph(format!("edge ({a}, {b}) out of range for n = {n}")));
            }
            if a == b {
                return Err(Error::InvalidGraph(format!("self-loop at node {a}")));
            }
            let (i, j) = if a < b { (a, b) } else { (b, a) };
            canon.push((i as u32, j as u32));
        }
        canon.sort_unstable();
        if let Some(w) = canon.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidGraph(format!("duplicate edge ({}, {})", w[0].0, w[0].1)));
        }
        let mut adjacency = vec![Vec::new(); n];
        for &(i, j) in &canon {
            adjacency[i as usize].push(j);
            adjacency[j as usize].push(i);
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        Ok(Self { node_ids, node_types, edges: canon, adjacency })
    }

    /// Untyped graph whose node ids are the decimal indices `0..n`.
    pub fn with_indices(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let ids = (0..n).map(|i| i.to_string()).collect();
        Self::new(ids, vec![NodeType::Untyped; n], edges)
    }

    /// Replaces the node types, keeping ids and edges.
    pub fn with_types(mut self, node_types: Vec<NodeType>) -> Result<Self> {
        if node_types.len() != self.node_count() {
            return Err(Error::InvalidGraph(format!(
                "{} node types given for {} nodes",
                node_types.len(),
                self.node_count()
            )));
        }
        self.node_types = node_types;
        Ok(self)
    }

    #[inline]
    pub fn node_count(&self) -> usize {
        self.node_ids.len()
    }

    #[inline]
    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Number of vertex pairs, `n(n-1)/2`.
    pub fn pair_count(&self) -> u64 {
        let n = self.node_count() as u64;
        n * (n - 1) / 2
    }

    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    pub fn node_ids(&self) -> &[String] {
        &self.node_ids
    }

    pub fn node_types(&self) -> &[NodeType] {
        &self.node_types
    }

    pub fn node_type(&self, v: usize) -> NodeType {
        self.node_types[v]
    }

    pub fn neighbors(&self, v: usize) -> &[u32] {
        &self.adjacency[v]
    }

    #[inline]
    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    pub fn degrees(&self) -> Vec<u32> {
        self.adjacency.iter().map(|a| a.len() as u32).collect()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        i < self.node_count() && self.adjacency[i].binary_search(&(j as u32)).is_ok()
    }

    /// `(primary, specialty, untyped)` node counts.
    pub fn type_counts(&self) -> (usize, usize, usize) {
        self.node_types.iter().fold((0, 0, 0), |(p, s, u), t| match t {
            NodeType::Primary => (p + 1, s, u),
            NodeType::Specialty => (p, s + 1, u),
            NodeType::Untyped => (p, s, u + 1),
        })
    }

    /// Relabels vertices: old vertex `v` becomes `perm[v]`, carrying its id and type.
    pub fn permuted(&self, perm: &[usize]) -> Result<Graph> {
        let n = self.node_count();
        let mut seen = vec![false; n];
        if perm.len() != n || perm.iter().any(|&p| p >= n || core::mem::replace(&mut seen[p], true)) {
            return Err(Error::InvalidGraph("relabeling is not a permutation".into()));
        }
        let mut ids = vec![String::new(); n];
        let mut types = vec![NodeType::Untyped; n];
        for v in 0..n {
            ids[perm[v]] = self.node_ids[v].clone();
            types[perm[v]] = self.node_types[v];
        }
        let edges = self.edges.iter().map(|&(i, j)| (perm[i as usize], perm[j as usize]));
        Graph::new(ids, types, edges)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_loops_duplicates_and_empty() {
        assert!(matches!(Graph::with_indices(3, [(1, 1)]), Err(Error::InvalidGraph(_))));
        assert!(matches!(Graph::with_indices(3, [(0, 1), (1, 0)]), Err(Error::InvalidGraph(_))));
        assert!(matches!(Graph::with_indices(3, [(0, 3)]), Err(Error::InvalidGraph(_))));
        assert!(matches!(Graph::with_indices(0, []), Err(Error::InvalidGraph(_))));
    }

    #[test]
    fn canonical_edges_and_symmetric_adjacency() {
        let g = Graph::with_indices(4, [(2, 0), (3, 1), (1, 0)]).unwrap();
        assert_eq!(g.edges(), &[(0, 1), (0, 2), (1, 3)]);
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(g.has_edge(i, j), g.has_edge(j, i));
            }
        }
        assert_eq!(g.degrees(), vec![2, 2, 1, 1]);
        assert_eq!(g.pair_count(), 6);
    }

    #[test]
    fn permutation_moves_ids_and_types() {
        let g = Graph::new(
            vec!["a".into(), "b".into(), "c".into()],
            vec![NodeType::Primary, NodeType::Specialty, NodeType::Untyped],
            [(0, 1)],
        )
        .unwrap();
        let p = g.permuted(&[2, 0, 1]).unwrap();
        assert_eq!(p.node_ids(), &["b".to_string(), "c".to_string(), "a".to_string()]);
        assert_eq!(p.node_type(2), NodeType::Primary);
        assert!(p.has_edge(2, 0));
        assert!(g.permuted(&[0, 0, 1]).is_err());
    }
}
