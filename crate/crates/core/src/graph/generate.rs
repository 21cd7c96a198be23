//! Seeded synthetic digraphs for experiments and tests.

use std::collections::HashSet;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::SliceRandom;
use rand::Rng;

use super::{DirectedGraph, NodeId};
use crate::error::{OimError, Result};
use crate::rng;

/// Chung-Lu style digraph with power-law expected degrees.
///
/// Node weights follow `(i + 1)^(-1 / (exponent - 1))`; out- and in-weights
/// are assigned through independent random permutations, and edges are drawn
/// source-by-out-weight, target-by-in-weight until `edges` distinct non-loop
/// edges exist.
pub fn power_law_digraph(nodes: usize, edges: usize, exponent: f64, seed: u64) -> Result<DirectedGraph> {
    if nodes < 2 {
        return Err(OimError::invalid("power-law digraph needs at least 2 nodes"));
    }
    if exponent <= 1.0 {
        return Err(OimError::invalid(format!(
            "power-law exponent {exponent} must exceed 1"
        )));
    }
    if edges > nodes * (nodes - 1) {
        return Err(OimError::invalid(format!("{edges} edges do not fit in {nodes} nodes")));
    }
    let mut rng = rng::stream(seed, 0);
    let base: Vec<f64> = (0..nodes)
        .map(|i| ((i + 1) as f64).powf(-1.0 / (exponent - 1.0)))
        .collect();
    let mut out_perm: Vec<usize> = (0..nodes).collect();
    let mut in_perm: Vec<usize> = (0..nodes).collect();
    out_perm.shuffle(&mut rng);
    in_perm.shuffle(&mut rng);
    let out_weights: Vec<f64> = out_perm.iter().map(|&i| base[i]).collect();
    let in_weights: Vec<f64> = in_perm.iter().map(|&i| base[i]).collect();
    let out_dist = WeightedIndex::new(&out_weights).map_err(|e| OimError::invalid(e.to_string()))?;
    let in_dist = WeightedIndex::new(&in_weights).map_err(|e| OimError::invalid(e.to_string()))?;

    let mut seen = HashSet::with_capacity(edges);
    let mut list = Vec::with_capacity(edges);
    let budget = 200 * edges.max(1);
    let mut attempts = 0;
    while list.len() < edges {
        attempts += 1;
        if attempts > budget {
            return Err(OimError::Capacity(format!(
                "could not place {edges} distinct edges on {nodes} nodes"
            )));
        }
        let u: NodeId = out_dist.sample(&mut rng);
        let v: NodeId = in_dist.sample(&mut rng);
        if u != v && seen.insert((u, v)) {
            list.push((u, v));
        }
    }
    DirectedGraph::from_edges(nodes, list)
}

/// Directed Watts-Strogatz graph: each node links to its `neighbors` clockwise
/// successors on a ring, and each link is rewired to a uniform random target
/// with probability `rewire`.
pub fn small_world_digraph(nodes: usize, neighbors: usize, rewire: f64, seed: u64) -> Result<DirectedGraph> {
    if neighbors == 0 || neighbors >= nodes {
        return Err(OimError::invalid(format!(
            "small-world graph needs 0 < neighbors < nodes, got {neighbors} and {nodes}"
        )));
    }
    if !(0.0..=1.0).contains(&rewire) {
        return Err(OimError::invalid(format!("rewire probability {rewire} outside [0, 1]")));
    }
    let mut rng = rng::stream(seed, 1);
    let mut seen = HashSet::new();
    let mut list = Vec::with_capacity(nodes * neighbors);
    for u in 0..nodes {
        for j in 1..=neighbors {
            let mut v = (u + j) % nodes;
            if rng.random::<f64>() < rewire {
                for _ in 0..32 {
                    let cand = rng.random_range(0..nodes);
                    if cand != u && !seen.contains(&(u, cand)) {
                        v = cand;
                        break;
                    }
                }
            }
            if seen.insert((u, v)) {
                list.push((u, v));
            }
        }
    }
    DirectedGraph::from_edges(nodes, list)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_law_has_requested_size_and_is_seeded() {
        let a = power_law_digraph(350, 5000, 2.5, 1).unwrap();
        let b = power_law_digraph(350, 5000, 2.5, 1).unwrap();
        assert_eq!(a.node_count(), 350);
        assert_eq!(a.edge_count(), 5000);
        assert_eq!(a, b);
        assert_ne!(a, power_law_digraph(350, 5000, 2.5, 2).unwrap());
    }

    #[test]
    fn power_law_degrees_are_skewed() {
        let g = power_law_digraph(350, 5000, 2.5, 4).unwrap();
        let mut deg: Vec<usize> = (0..350).map(|u| g.out_degree(u)).collect();
        deg.sort_unstable();
        let median = deg[175];
        assert!(deg[349] > 4 * median.max(1));
    }

    #[test]
    fn small_world_without_rewiring_is_a_ring_lattice() {
        let g = small_world_digraph(10, 2, 0.0, 0).unwrap();
        assert_eq!(g.edge_count(), 20);
        assert!((0..10).all(|u| g.out_degree(u) == 2 && g.in_degree(u) == 2));
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(power_law_digraph(3, 7, 2.5, 0).is_err());
        assert!(power_law_digraph(10, 5, 1.0, 0).is_err());
        assert!(small_world_digraph(5, 5, 0.1, 0).is_err());
    }
}
