//! Independent-cascade diffusion with edge-level semi-bandit feedback.
//!
//! A newly activated node gets exactly one Bernoulli attempt per outgoing
//! edge, sampled at the moment it activates. Every outgoing edge of an
//! activated node is observed, including edges into nodes that were already
//! active, so the observed set is exactly `{(u, v) : u activated}`.

use rand::Rng;
use rayon::prelude::*;

use crate::error::{OimError, Result};
use crate::graph::{DirectedGraph, EdgeId, NodeId};
use crate::rng;

/// Largest edge count accepted by [`exact_spread`].
pub const EXACT_EDGE_LIMIT: usize = 20;

/// Samples per independent stream in Monte-Carlo estimation.
const MC_CHUNK: usize = 512;

/// Result of one diffusion.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CascadeOutcome {
    /// Activated nodes in activation order; seeds come first.
    pub activated: Vec<NodeId>,
    /// Every edge whose source activated, with its sampled activation bit.
    pub observed: Vec<(EdgeId, bool)>,
}

impl CascadeOutcome {
    pub fn spread(&self) -> usize {
        self.activated.len()
    }

    pub fn activation_mask(&self, node_count: usize) -> Vec<bool> {
        let mut mask = vec![false; node_count];
        for &u in &self.activated {
            mask[u] = true;
        }
        mask
    }
}

/// Reusable scratch space for repeated diffusions on one graph.
pub struct CascadeSimulator<'g> {
    graph: &'g DirectedGraph,
    mark: Vec<u32>,
    epoch: u32,
    queue: Vec<NodeId>,
}

impl<'g> CascadeSimulator<'g> {
    pub fn new(graph: &'g DirectedGraph) -> Self {
        CascadeSimulator {
            graph,
            mark: vec![0; graph.node_count()],
            epoch: 0,
            queue: Vec::new(),
        }
    }

    fn next_epoch(&mut self) {
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.mark.iter_mut().for_each(|m| *m = 0);
            self.epoch = 1;
        }
    }

    /// Runs one diffusion and records the edge-level feedback.
    pub fn simulate<R: Rng + ?Sized>(
        &mut self,
        probs: &[f64],
        seeds: &[NodeId],
        rng: &mut R,
    ) -> Result<CascadeOutcome> {
        validate(self.graph, probs, seeds)?;
        let mut observed = Vec::new();
        self.run(probs, seeds, rng, |e, bit| observed.push((e, bit)));
        Ok(CascadeOutcome {
            activated: self.queue.clone(),
            observed,
        })
    }

    /// Runs one diffusion and returns only the spread.
    pub fn spread<R: Rng + ?Sized>(&mut self, probs: &[f64], seeds: &[NodeId], rng: &mut R) -> Result<usize> {
        validate(self.graph, probs, seeds)?;
        Ok(self.spread_unchecked(probs, seeds, rng))
    }

    fn spread_unchecked<R: Rng + ?Sized>(&mut self, probs: &[f64], seeds: &[NodeId], rng: &mut R) -> usize {
        self.run(probs, seeds, rng, |_, _| {});
        self.queue.len()
    }

    fn run<R: Rng + ?Sized>(
        &mut self,
        probs: &[f64],
        seeds: &[NodeId],
        rng: &mut R,
        mut on_edge: impl FnMut(EdgeId, bool),
    ) {
        self.next_epoch();
        let epoch = self.epoch;
        self.queue.clear();
        for &s in seeds {
            if self.mark[s] != epoch {
                self.mark[s] = epoch;
                self.queue.push(s);
            }
        }
        let mut head = 0;
        while head < self.queue.len() {
            let u = self.queue[head];
            head += 1;
            for &e in self.graph.out_edges(u) {
                let bit = rng.random::<f64>() < probs[e];
                on_edge(e, bit);
                let v = self.graph.target(e);
                if bit && self.mark[v] != epoch {
                    self.mark[v] = epoch;
                    self.queue.push(v);
                }
            }
        }
    }
}

fn validate(graph: &DirectedGraph, probs: &[f64], seeds: &[NodeId]) -> Result<()> {
    if probs.len() != graph.edge_count() {
        return Err(OimError::Dimension {
            expected: graph.edge_count(),
            actual: probs.len(),
        });
    }
    if seeds.is_empty() {
        return Err(OimError::invalid("seed set is empty"));
    }
    if let Some(&s) = seeds.iter().find(|&&s| s >= graph.node_count()) {
        return Err(OimError::invalid(format!(
            "seed {s} out of range for {} nodes",
            graph.node_count()
        )));
    }
    Ok(())
}

pub fn simulate_cascade<R: Rng + ?Sized>(
    graph: &DirectedGraph,
    probs: &[f64],
    seeds: &[NodeId],
    rng: &mut R,
) -> Result<CascadeOutcome> {
    CascadeSimulator::new(graph).simulate(probs, seeds, rng)
}

/// Draws a full live-edge pattern: edge `e` is live with probability `probs[e]`.
pub fn sample_live_edges<R: Rng + ?Sized>(graph: &DirectedGraph, probs: &[f64], rng: &mut R) -> Vec<bool> {
    (0..graph.edge_count())
        .map(|e| rng.random::<f64>() < probs[e])
        .collect()
}

/// Nodes reachable from `seeds` over live edges, as a mask.
pub fn reachable(graph: &DirectedGraph, live: &[bool], seeds: &[NodeId]) -> Vec<bool> {
    let mut active = vec![false; graph.node_count()];
    let mut stack = Vec::new();
    for &s in seeds {
        if !active[s] {
            active[s] = true;
            stack.push(s);
        }
    }
    while let Some(u) = stack.pop() {
        for &e in graph.out_edges(u) {
            let v = graph.target(e);
            if live[e] && !active[v] {
                active[v] = true;
                stack.push(v);
            }
        }
    }
    active
}

/// Expected spread by enumerating all `2^|E|` live-edge patterns.
pub fn exact_spread(graph: &DirectedGraph, probs: &[f64], seeds: &[NodeId]) -> Result<f64> {
    validate(graph, probs, seeds)?;
    let m = graph.edge_count();
    if m > EXACT_EDGE_LIMIT {
        return Err(OimError::Capacity(format!(
            "exact spread enumerates at most {EXACT_EDGE_LIMIT} edges, graph has {m}"
        )));
    }
    let mut live = vec![false; m];
    let mut total = 0.0;
    for mask in 0u32..(1u32 << m) {
        let mut weight = 1.0;
        for (e, slot) in live.iter_mut().enumerate() {
            *slot = mask >> e & 1 == 1;
            weight *= if *slot { probs[e] } else { 1.0 - probs[e] };
        }
        if weight == 0.0 {
            continue;
        }
        let count = reachable(graph, &live, seeds).iter().filter(|&&a| a).count();
        total += weight * count as f64;
    }
    Ok(total)
}

/// Monte-Carlo spread estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpreadEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: usize,
}

/// Mean spread over `samples` diffusions. Sample `i` belongs to chunk
/// `i / 512`, and each chunk draws from its own stream of `base_seed`, so the
/// result is identical for any thread count.
pub fn monte_carlo_spread_seeded(
    graph: &DirectedGraph,
    probs: &[f64],
    seeds: &[NodeId],
    samples: usize,
    base_seed: u64,
) -> Result<SpreadEstimate> {
    validate(graph, probs, seeds)?;
    if samples == 0 {
        return Err(OimError::invalid("Monte-Carlo spread needs at least one sample"));
    }
    let chunks = samples.div_ceil(MC_CHUNK);
    let (sum, sum_sq) = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = rng::stream(base_seed, c as u64);
            let mut sim = CascadeSimulator::new(graph);
            let len = MC_CHUNK.min(samples - c * MC_CHUNK);
            let mut acc = (0u64, 0u128);
            for _ in 0..len {
                let s = sim.spread_unchecked(probs, seeds, &mut rng) as u64;
                acc.0 += s;
                acc.1 += (s as u128) * (s as u128);
            }
            acc
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));

    let n = samples as f64;
    let mean = sum as f64 / n;
    let var = if samples > 1 {
        ((sum_sq as f64 - n * mean * mean) / (n - 1.0)).max(0.0)
    } else {
        0.0
    };
    Ok(SpreadEstimate {
        mean,
        std_error: (var / n).sqrt(),
        samples,
    })
}

pub fn monte_carlo_spread<R: Rng + ?Sized>(
    graph: &DirectedGraph,
    probs: &[f64],
    seeds: &[NodeId],
    samples: usize,
    rng: &mut R,
) -> Result<f64> {
    let base = rng.random::<u64>();
    Ok(monte_carlo_spread_seeded(graph, probs, seeds, samples, base)?.mean)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    fn chain() -> DirectedGraph {
        DirectedGraph::from_edges(3, vec![(0, 1), (1, 2)]).unwrap()
    }

    pub(crate) fn diamond() -> DirectedGraph {
        DirectedGraph::from_edges(4, vec![(0, 1), (0, 2), (1, 3), (2, 3)]).unwrap()
    }

    #[test]
    fn deterministic_chain_activates_everything() {
        let out = simulate_cascade(&chain(), &[1.0, 1.0], &[0], &mut stream(1, 0)).unwrap();
        assert_eq!(out.activated, vec![0, 1, 2]);
        assert_eq!(out.spread(), 3);
        assert_eq!(out.observed, vec![(0, true), (1, true)]);
    }

    #[test]
    fn zero_probabilities_only_seeds() {
        let g = diamond();
        let out = simulate_cascade(&g, &[0.0; 4], &[0, 1], &mut stream(1, 0)).unwrap();
        assert_eq!(out.spread(), 2);
        let mut edges: Vec<_> = out.observed.clone();
        edges.sort();
        assert_eq!(edges, vec![(0, false), (1, false), (2, false)]);
    }

    #[test]
    fn edges_into_active_nodes_are_observed() {
        // 0 -> 1, 1 -> 0: both seeds active; both edges still observed.
        let g = DirectedGraph::from_edges(2, vec![(0, 1), (1, 0)]).unwrap();
        let out = simulate_cascade(&g, &[1.0, 1.0], &[0, 1], &mut stream(1, 0)).unwrap();
        assert_eq!(out.observed.len(), 2);
    }

    #[test]
    fn empty_seed_set_is_an_error() {
        assert!(simulate_cascade(&chain(), &[0.5, 0.5], &[], &mut stream(1, 0)).is_err());
        assert!(simulate_cascade(&chain(), &[0.5, 0.5], &[3], &mut stream(1, 0)).is_err());
        assert!(simulate_cascade(&chain(), &[0.5], &[0], &mut stream(1, 0)).is_err());
    }

    #[test]
    fn fork_expected_spread_by_monte_carlo() {
        // a->b, a->c with 0.5: patterns give (1 + 2 + 2 + 3) / 4 = 2.
        let g = DirectedGraph::from_edges(3, vec![(0, 1), (0, 2)]).unwrap();
        let est = monte_carlo_spread_seeded(&g, &[0.5, 0.5], &[0], 100_000, 3).unwrap();
        assert!((est.mean - 2.0).abs() < 3.0 * est.std_error, "{est:?}");
        assert!((exact_spread(&g, &[0.5, 0.5], &[0]).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn exact_spread_examples() {
        let g = DirectedGraph::from_edges(2, vec![(0, 1)]).unwrap();
        assert!((exact_spread(&g, &[0.3], &[0]).unwrap() - 1.3).abs() < 1e-15);
        let d = diamond();
        assert!((exact_spread(&d, &[0.5; 4], &[0]).unwrap() - 2.4375).abs() < 1e-15);
        assert_eq!(exact_spread(&d, &[0.5; 4], &[0, 1, 2, 3]).unwrap(), 4.0);
    }

    #[test]
    fn exact_spread_capacity() {
        let edges: Vec<_> = (0..21).map(|i| (i, i + 1)).collect();
        let g = DirectedGraph::from_edges(22, edges).unwrap();
        assert!(matches!(exact_spread(&g, &[0.5; 21], &[0]), Err(OimError::Capacity(_))));
    }

    #[test]
    fn monte_carlo_on_deterministic_graph_is_exact() {
        let g = diamond();
        let probs = [1.0, 0.0, 1.0, 0.0];
        let exact = exact_spread(&g, &probs, &[0]).unwrap();
        for samples in [1, 7, 1000] {
            let mc = monte_carlo_spread(&g, &probs, &[0], samples, &mut stream(5, 0)).unwrap();
            assert_eq!(mc, exact);
        }
        let all = monte_carlo_spread(&g, &[0.5; 4], &[0, 1, 2, 3], 10, &mut stream(5, 0)).unwrap();
        assert_eq!(all, 4.0);
    }

    #[test]
    fn monte_carlo_diamond_within_tolerance() {
        let est = monte_carlo_spread_seeded(&diamond(), &[0.5; 4], &[0], 100_000, 17).unwrap();
        assert!((est.mean - 2.4375).abs() < 0.02, "{est:?}");
    }

    #[test]
    fn monte_carlo_is_thread_count_independent() {
        let g = crate::graph::power_law_digraph(100, 600, 2.5, 2).unwrap();
        let p = crate::graph::assign_weighted_cascade(&g);
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| monte_carlo_spread_seeded(&g, p.probabilities(), &[0, 1, 2], 5000, 9).unwrap())
        };
        assert_eq!(run(1), run(4));
    }

    #[test]
    fn reachability_is_monotone_in_seeds() {
        let g = crate::graph::power_law_digraph(60, 300, 2.5, 8).unwrap();
        let mut rng = stream(4, 0);
        for _ in 0..20 {
            let live = sample_live_edges(&g, &vec![0.3; g.edge_count()], &mut rng);
            let small = reachable(&g, &live, &[1, 5]);
            let large = reachable(&g, &live, &[1, 5, 9, 20]);
            assert!(small.iter().zip(&large).all(|(s, l)| !s || *l));
        }
    }
}
