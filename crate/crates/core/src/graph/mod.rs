//! Directed graph topology, ground-truth probabilities and edge features.

mod generate;
mod io;
mod spectral;

pub use generate::{power_law_digraph, small_world_digraph};
pub use io::{load_edge_list, load_edge_list_path, EdgeListOptions, LoadReport, RejectedEdge};
pub use spectral::{
    laplacian_eigenpairs, laplacian_eigenpairs_dense, laplacian_eigenpairs_iterative, laplacian_features, Eigenpairs,
    FeatureMap, DENSE_EIGEN_LIMIT,
};

use std::collections::HashSet;

use crate::error::{OimError, Result};

pub type NodeId = usize;
pub type EdgeId = usize;

/// Immutable directed graph in compressed adjacency form.
///
/// Edges keep their insertion order; `EdgeId` is the position in that order.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectedGraph {
    node_count: usize,
    edges: Vec<(NodeId, NodeId)>,
    out_offsets: Vec<usize>,
    out_edges: Vec<EdgeId>,
    in_offsets: Vec<usize>,
    in_edges: Vec<EdgeId>,
}

impl DirectedGraph {
    /// Builds a graph from an explicit edge list.
    ///
    /// Rejects endpoints outside `0..node_count`, self-loops and duplicate
    /// `(source, target)` pairs.
    pub fn from_edges(node_count: usize, edges: Vec<(NodeId, NodeId)>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(edges.len());
        for (e, &(u, v)) in edges.iter().enumerate() {
            if u >= node_count || v >= node_count {
                return Err(OimError::invalid(format!(
                    "edge {e} ({u}, {v}) out of range for {node_count} nodes"
                )));
            }
            if u == v {
                return Err(OimError::invalid(format!("edge {e} is a self-loop on node {u}")));
            }
            if !seen.insert((u, v)) {
                return Err(OimError::invalid(format!("duplicate edge ({u}, {v})")));
            }
        }
        Ok(Self::build(node_count, edges))
    }

    fn build(node_count: usize, edges: Vec<(NodeId, NodeId)>) -> Self {
        let (out_offsets, out_edges) = bucket(node_count, edges.iter().map(|&(u, _)| u));
        let (in_offsets, in_edges) = bucket(node_count, edges.iter().map(|&(_, v)| v));
        DirectedGraph {
            node_count,
            edges,
            out_offsets,
            out_edges,
            in_offsets,
            in_edges,
        }
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(NodeId, NodeId)] {
        &self.edges
    }

    pub fn edge(&self, e: EdgeId) -> (NodeId, NodeId) {
        self.edges[e]
    }

    pub fn source(&self, e: EdgeId) -> NodeId {
        self.edges[e].0
    }

    pub fn target(&self, e: EdgeId) -> NodeId {
        self.edges[e].1
    }

    /// Edges leaving `u`, in insertion order.
    pub fn out_edges(&self, u: NodeId) -> &[EdgeId] {
        &self.out_edges[self.out_offsets[u]..self.out_offsets[u + 1]]
    }

    /// Edges entering `v`, in insertion order.
    pub fn in_edges(&self, v: NodeId) -> &[EdgeId] {
        &self.in_edges[self.in_offsets[v]..self.in_offsets[v + 1]]
    }

    pub fn out_degree(&self, u: NodeId) -> usize {
        self.out_offsets[u + 1] - self.out_offsets[u]
    }

    pub fn in_degree(&self, v: NodeId) -> usize {
        self.in_offsets[v + 1] - self.in_offsets[v]
    }

    /// Sorted, deduplicated neighbour lists of the underlying undirected graph.
    pub fn symmetrized_neighbors(&self) -> Vec<Vec<NodeId>> {
        let mut adj = vec![Vec::new(); self.node_count];
        for &(u, v) in &self.edges {
            adj[u].push(v);
            adj[v].push(u);
        }
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
        }
        adj
    }
}

fn bucket(node_count: usize, keys: impl Iterator<Item = NodeId> + Clone) -> (Vec<usize>, Vec<EdgeId>) {
    let mut offsets = vec![0usize; node_count + 1];
    for k in keys.clone() {
        offsets[k + 1] += 1;
    }
    for i in 0..node_count {
        offsets[i + 1] += offsets[i];
    }
    let mut cursor = offsets.clone();
    let mut items = vec![0; offsets[node_count]];
    for (e, k) in keys.enumerate() {
        items[cursor[k]] = e;
        cursor[k] += 1;
    }
    (offsets, items)
}

/// Per-edge influence probabilities of the ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct TrueModel {
    probability: Vec<f64>,
}

impl TrueModel {
    pub fn new(probability: Vec<f64>) -> Result<Self> {
        if let Some((e, p)) = probability.iter().enumerate().find(|(_, p)| !(0.0..=1.0).contains(*p)) {
            return Err(OimError::invalid(format!("probability {p} of edge {e} outside [0, 1]")));
        }
        Ok(TrueModel { probability })
    }

    /// Same probability on every edge.
    pub fn uniform(edge_count: usize, p: f64) -> Result<Self> {
        Self::new(vec![p; edge_count])
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probability
    }

    pub fn get(&self, e: EdgeId) -> f64 {
        self.probability[e]
    }
}

/// Weighted-cascade ground truth: edge `(u, v)` gets `1 / in_degree(v)`.
pub fn assign_weighted_cascade(graph: &DirectedGraph) -> TrueModel {
    let probability = graph
        .edges()
        .iter()
        .map(|&(_, v)| 1.0 / graph.in_degree(v) as f64)
        .collect();
    TrueModel { probability }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn star_into_hub(leaves: usize) -> DirectedGraph {
        let edges = (1..=leaves).map(|l| (l, 0)).collect();
        DirectedGraph::from_edges(leaves + 1, edges).unwrap()
    }

    #[test]
    fn adjacency_is_consistent() {
        let g = DirectedGraph::from_edges(4, vec![(0, 1), (0, 2), (2, 1), (3, 0)]).unwrap();
        assert_eq!(g.out_edges(0), &[0, 1]);
        assert_eq!(g.in_edges(1), &[0, 2]);
        assert_eq!(g.in_degree(1), 2);
        assert_eq!(g.out_degree(3), 1);
        let mut owners = vec![0; g.edge_count()];
        for u in 0..g.node_count() {
            for &e in g.out_edges(u) {
                owners[e] += 1;
                assert_eq!(g.source(e), u);
            }
        }
        assert!(owners.iter().all(|&c| c == 1));
    }

    #[test]
    fn rejects_self_loops_and_duplicates() {
        assert!(DirectedGraph::from_edges(2, vec![(1, 1)]).is_err());
        assert!(DirectedGraph::from_edges(2, vec![(0, 1), (0, 1)]).is_err());
        assert!(DirectedGraph::from_edges(2, vec![(0, 2)]).is_err());
    }

    #[test]
    fn weighted_cascade_four_in_edges() {
        let g = star_into_hub(4);
        let m = assign_weighted_cascade(&g);
        assert!(m.probabilities().iter().all(|&p| p == 0.25));
    }

    #[test]
    fn weighted_cascade_single_in_edge_is_certain() {
        let g = DirectedGraph::from_edges(2, vec![(0, 1)]).unwrap();
        assert_eq!(assign_weighted_cascade(&g).get(0), 1.0);
    }

    #[test]
    fn weighted_cascade_star_of_ten() {
        let g = star_into_hub(10);
        let m = assign_weighted_cascade(&g);
        assert!(m.probabilities().iter().all(|&p| (p - 0.1).abs() < 1e-15));
    }

    #[test]
    fn weighted_cascade_in_probabilities_sum_to_one() {
        let g = power_law_digraph(80, 600, 2.3, 11).unwrap();
        let m = assign_weighted_cascade(&g);
        for v in 0..g.node_count() {
            let incoming = g.in_edges(v);
            if incoming.is_empty() {
                continue;
            }
            let first = m.get(incoming[0]);
            assert!(incoming.iter().all(|&e| m.get(e) == first));
            let total: f64 = incoming.iter().map(|&e| m.get(e)).sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn true_model_rejects_out_of_range() {
        assert!(TrueModel::new(vec![0.5, 1.2]).is_err());
        assert!(TrueModel::new(vec![f64::NAN]).is_err());
    }
}
