//! Offline seed selection on estimated influence probabilities.
//!
//! Two oracles are provided: lazy-forward (CELF) greedy over a pluggable
//! spread evaluator, and reverse-reachable (RR) set sampling followed by
//! greedy maximum coverage. Estimates are clamped to `[0, 1]` before use.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cascade::{exact_spread, monte_carlo_spread_seeded};
use crate::error::{OimError, Result};
use crate::graph::{DirectedGraph, NodeId};
use crate::rng;

/// `Auto` uses RR sets above this many edges and greedy otherwise.
pub const AUTO_RIS_EDGE_THRESHOLD: usize = 1000;

const RR_CHUNK: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleMethod {
    Auto,
    GreedyCelf,
    Ris,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleConfig {
    /// Seed budget.
    pub k: usize,
    pub method: OracleMethod,
    /// Diffusions per spread evaluation in greedy.
    pub mc_samples: usize,
    /// Approximation slack of the RR-set count.
    pub epsilon: f64,
    /// Failure-probability exponent of the RR-set count.
    pub ell: f64,
    pub rr_set_floor: usize,
    pub rr_set_cap: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            k: 10,
            method: OracleMethod::Auto,
            mc_samples: 200,
            epsilon: 0.5,
            ell: 1.0,
            rr_set_floor: 1000,
            rr_set_cap: 10_000,
        }
    }
}

impl OracleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(OimError::invalid("seed budget k must be at least 1"));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(OimError::invalid(format!("epsilon {} outside (0, 1)", self.epsilon)));
        }
        if !(self.ell > 0.0) {
            return Err(OimError::invalid(format!("ell {} must be positive", self.ell)));
        }
        if self.mc_samples == 0 {
            return Err(OimError::invalid("mc_samples must be at least 1"));
        }
        if self.rr_set_floor == 0 || self.rr_set_floor > self.rr_set_cap {
            return Err(OimError::invalid(format!(
                "need 1 <= rr_set_floor ({}) <= rr_set_cap ({})",
                self.rr_set_floor, self.rr_set_cap
            )));
        }
        Ok(())
    }

    /// The concrete method used on `graph`.
    pub fn resolve(&self, graph: &DirectedGraph) -> OracleMethod {
        match self.method {
            OracleMethod::Auto if graph.edge_count() > AUTO_RIS_EDGE_THRESHOLD => OracleMethod::Ris,
            OracleMethod::Auto => OracleMethod::GreedyCelf,
            m => m,
        }
    }
}

/// Chosen seeds with the oracle's own spread estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub seeds: Vec<NodeId>,
    pub estimated_spread: f64,
}

/// Clamps to `[0, 1]`; NaN becomes 0.
pub fn clamp_estimates(est: &[f64]) -> Vec<f64> {
    est.iter()
        .map(|&p| if p.is_nan() { 0.0 } else { p.clamp(0.0, 1.0) })
        .collect()
}

fn check_budget(graph: &DirectedGraph, est: &[f64], cfg: &OracleConfig) -> Result<()> {
    cfg.validate()?;
    if cfg.k > graph.node_count() {
        return Err(OimError::invalid(format!(
            "k = {} exceeds node count {}",
            cfg.k,
            graph.node_count()
        )));
    }
    if est.len() != graph.edge_count() {
        return Err(OimError::Dimension {
            expected: graph.edge_count(),
            actual: est.len(),
        });
    }
    Ok(())
}

pub fn select_seeds<R: Rng + ?Sized>(
    graph: &DirectedGraph,
    est: &[f64],
    cfg: &OracleConfig,
    rng: &mut R,
) -> Result<Selection> {
    match cfg.resolve(graph) {
        OracleMethod::Ris => select_seeds_ris(graph, est, cfg, rng),
        _ => select_seeds_greedy(graph, est, cfg, rng),
    }
}

/// Expected spread of a seed set under some fixed probabilities.
pub trait SpreadEvaluator {
    fn spread(&mut self, seeds: &[NodeId]) -> Result<f64>;
}

/// Monte-Carlo evaluator with common random numbers: every evaluation uses
/// the same sample streams, which keeps marginal gains consistent.
pub struct MonteCarloEvaluator<'a> {
    pub graph: &'a DirectedGraph,
    pub probs: &'a [f64],
    pub samples: usize,
    pub base_seed: u64,
}

impl SpreadEvaluator for MonteCarloEvaluator<'_> {
    fn spread(&mut self, seeds: &[NodeId]) -> Result<f64> {
        if seeds.is_empty() {
            return Ok(0.0);
        }
        Ok(monte_carlo_spread_seeded(self.graph, self.probs, seeds, self.samples, self.base_seed)?.mean)
    }
}

/// Enumeration-based evaluator for tiny graphs.
pub struct ExactEvaluator<'a> {
    pub graph: &'a DirectedGraph,
    pub probs: &'a [f64],
}

impl SpreadEvaluator for ExactEvaluator<'_> {
    fn spread(&mut self, seeds: &[NodeId]) -> Result<f64> {
        if seeds.is_empty() {
            return Ok(0.0);
        }
        exact_spread(self.graph, self.probs, seeds)
    }
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    gain: f64,
    node: NodeId,
    round: usize,
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Candidate {}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Candidate {
    // Max-heap on gain; among equal gains the smaller node id wins.
    fn cmp(&self, other: &Self) -> Ordering {
        self.gain
            .total_cmp(&other.gain)
            .then_with(|| other.node.cmp(&self.node))
    }
}

/// Lazy-forward greedy. Ties go to the smallest node id.
pub fn lazy_greedy<E: SpreadEvaluator>(node_count: usize, k: usize, eval: &mut E) -> Result<Selection> {
    if k == 0 || k > node_count {
        return Err(OimError::invalid(format!("k = {k} must be in 1..={node_count}")));
    }
    let mut heap = BinaryHeap::with_capacity(node_count);
    for u in 0..node_count {
        heap.push(Candidate {
            gain: eval.spread(&[u])?,
            node: u,
            round: 0,
        });
    }
    let mut seeds = Vec::with_capacity(k);
    let mut current = 0.0;
    while seeds.len() < k {
        let Some(top) = heap.pop() else { break };
        if top.round == seeds.len() {
            seeds.push(top.node);
            current += top.gain;
            continue;
        }
        seeds.push(top.node);
        let value = eval.spread(&seeds)?;
        seeds.pop();
        heap.push(Candidate {
            gain: value - current,
            node: top.node,
            round: seeds.len(),
        });
    }
    let estimated_spread = eval.spread(&seeds)?;
    Ok(Selection {
        seeds,
        estimated_spread,
    })
}

/// CELF greedy with a Monte-Carlo evaluator of `cfg.mc_samples` diffusions.
pub fn select_seeds_greedy<R: Rng + ?Sized>(
    graph: &DirectedGraph,
    est: &[f64],
    cfg: &OracleConfig,
    rng: &mut R,
) -> Result<Selection> {
    check_budget(graph, est, cfg)?;
    let probs = clamp_estimates(est);
    let mut eval = MonteCarloEvaluator {
        graph,
        probs: &probs,
        samples: cfg.mc_samples,
        base_seed: rng.random(),
    };
    lazy_greedy(graph.node_count(), cfg.k, &mut eval)
}

/// Number of RR sets: `ceil((k + ell) n ln n / epsilon^2)` bounded to
/// `[rr_set_floor, rr_set_cap]`.
pub fn rr_set_count(node_count: usize, cfg: &OracleConfig) -> usize {
    let n = node_count as f64;
    let raw = ((cfg.k as f64 + cfg.ell) * n * n.max(1.0).ln() / (cfg.epsilon * cfg.epsilon)).ceil();
    let capped = if raw >= cfg.rr_set_cap as f64 {
        cfg.rr_set_cap
    } else {
        raw as usize
    };
    capped.max(cfg.rr_set_floor)
}

/// A collection of reverse-reachable sets.
#[derive(Debug, Clone)]
pub struct RrSets {
    node_count: usize,
    offsets: Vec<usize>,
    nodes: Vec<NodeId>,
}

impl RrSets {
    pub fn len(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn set(&self, i: usize) -> &[NodeId] {
        &self.nodes[self.offsets[i]..self.offsets[i + 1]]
    }

    /// How many sets contain `u`.
    pub fn hits(&self, u: NodeId) -> usize {
        self.nodes.iter().filter(|&&w| w == u).count()
    }

    /// How many sets intersect `seeds`.
    pub fn coverage(&self, seeds: &[NodeId]) -> usize {
        let mut is_seed = vec![false; self.node_count];
        for &s in seeds {
            is_seed[s] = true;
        }
        (0..self.len())
            .filter(|&i| self.set(i).iter().any(|&w| is_seed[w]))
            .count()
    }

    /// Greedy maximum coverage; ties go to the smallest node id. The spread
    /// estimate is `node_count * covered / len`.
    pub fn greedy_cover(&self, k: usize) -> Selection {
        let n = self.node_count;
        let mut count = vec![0usize; n];
        for &w in &self.nodes {
            count[w] += 1;
        }
        // Inverted index: sets containing each node.
        let mut starts = vec![0usize; n + 1];
        for &w in &self.nodes {
            starts[w + 1] += 1;
        }
        for i in 0..n {
            starts[i + 1] += starts[i];
        }
        let mut cursor = starts.clone();
        let mut member_of = vec![0usize; self.nodes.len()];
        for i in 0..self.len() {
            for &w in self.set(i) {
                member_of[cursor[w]] = i;
                cursor[w] += 1;
            }
        }

        let mut covered = vec![false; self.len()];
        let mut chosen = vec![false; n];
        let mut seeds = Vec::with_capacity(k);
        let mut total = 0usize;
        for _ in 0..k.min(n) {
            let best = (0..n)
                .filter(|&u| !chosen[u])
                .max_by(|&a, &b| count[a].cmp(&count[b]).then(b.cmp(&a)))
                .expect("k <= node_count");
            chosen[best] = true;
            seeds.push(best);
            for &s in &member_of[starts[best]..starts[best + 1]] {
                if !covered[s] {
                    covered[s] = true;
                    total += 1;
                    for &w in self.set(s) {
                        count[w] -= 1;
                    }
                }
            }
        }
        let estimated_spread = if self.is_empty() {
            0.0
        } else {
            n as f64 * total as f64 / self.len() as f64
        };
        Selection {
            seeds,
            estimated_spread,
        }
    }
}

/// Samples `count` RR sets. Set `i` uses stream `i / 256` of a base seed
/// drawn from `rng`, so the collection does not depend on the thread count.
pub fn sample_rr_sets<R: Rng + ?Sized>(graph: &DirectedGraph, probs: &[f64], count: usize, rng: &mut R) -> RrSets {
    let base = rng.random::<u64>();
    let n = graph.node_count();
    let chunks: Vec<(Vec<usize>, Vec<NodeId>)> = (0..count.div_ceil(RR_CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut rng = rng::stream(base, c as u64);
            let mut mark = vec![false; n];
            let mut lens = Vec::with_capacity(RR_CHUNK);
            let mut nodes = Vec::new();
            for _ in 0..RR_CHUNK.min(count - c * RR_CHUNK) {
                let start = nodes.len();
                let root = rng.random_range(0..n);
                mark[root] = true;
                nodes.push(root);
                let mut head = start;
                while head < nodes.len() {
                    let v = nodes[head];
                    head += 1;
                    for &e in graph.in_edges(v) {
                        let u = graph.source(e);
                        if mark[u] {
                            continue;
                        }
                        let p = probs[e];
                        if p >= 1.0 || (p > 0.0 && rng.random::<f64>() < p) {
                            mark[u] = true;
                            nodes.push(u);
                        }
                    }
                }
                for &w in &nodes[start..] {
                    mark[w] = false;
                }
                lens.push(nodes.len() - start);
            }
            (lens, nodes)
        })
        .collect();

    let mut offsets = Vec::with_capacity(count + 1);
    offsets.push(0);
    let mut nodes = Vec::new();
    for (lens, chunk_nodes) in chunks {
        for len in lens {
            offsets.push(offsets.last().unwrap() + len);
        }
        nodes.extend(chunk_nodes);
    }
    RrSets {
        node_count: n,
        offsets,
        nodes,
    }
}

/// RR-set sampling followed by greedy maximum coverage.
pub fn select_seeds_ris<R: Rng + ?Sized>(
    graph: &DirectedGraph,
    est: &[f64],
    cfg: &OracleConfig,
    rng: &mut R,
) -> Result<Selection> {
    check_budget(graph, est, cfg)?;
    let probs = clamp_estimates(est);
    let sets = sample_rr_sets(graph, &probs, rr_set_count(graph.node_count(), cfg), rng);
    Ok(sets.greedy_cover(cfg.k))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    fn diamond() -> DirectedGraph {
        DirectedGraph::from_edges(4, vec![(0, 1), (0, 2), (1, 3), (2, 3)]).unwrap()
    }

    fn cfg(k: usize, method: OracleMethod) -> OracleConfig {
        OracleConfig {
            k,
            method,
            ..OracleConfig::default()
        }
    }

    #[test]
    fn greedy_picks_chain_head() {
        let g = DirectedGraph::from_edges(3, vec![(0, 1), (1, 2)]).unwrap();
        let sel = select_seeds_greedy(&g, &[1.0, 1.0], &cfg(1, OracleMethod::GreedyCelf), &mut stream(0, 0)).unwrap();
        assert_eq!(sel.seeds, vec![0]);
        assert_eq!(sel.estimated_spread, 3.0);
    }

    #[test]
    fn greedy_covers_two_disjoint_chains() {
        // 0->1->2 and 3->4.
        let g = DirectedGraph::from_edges(5, vec![(0, 1), (1, 2), (3, 4)]).unwrap();
        let mut sel = select_seeds_greedy(&g, &[1.0; 3], &cfg(2, OracleMethod::GreedyCelf), &mut stream(0, 0)).unwrap();
        sel.seeds.sort();
        assert_eq!(sel.seeds, vec![0, 3]);
    }

    #[test]
    fn exact_greedy_on_diamond_matches_exhaustive() {
        let g = diamond();
        let probs = [0.5; 4];
        let best = (0..4)
            .map(|u| (exact_spread(&g, &probs, &[u]).unwrap(), u))
            .max_by(|a, b| a.0.total_cmp(&b.0))
            .unwrap();
        assert_eq!(best, (2.4375, 0));
        let sel = lazy_greedy(
            4,
            1,
            &mut ExactEvaluator {
                graph: &g,
                probs: &probs,
            },
        )
        .unwrap();
        assert_eq!(sel.seeds, vec![0]);
        assert!((sel.estimated_spread - 2.4375).abs() < 1e-15);
    }

    #[test]
    fn greedy_ties_go_to_smallest_id() {
        let g = DirectedGraph::from_edges(4, vec![]).unwrap();
        let sel = lazy_greedy(4, 2, &mut ExactEvaluator { graph: &g, probs: &[] }).unwrap();
        assert_eq!(sel.seeds, vec![0, 1]);
    }

    #[test]
    fn budget_larger_than_graph_is_rejected() {
        let g = diamond();
        assert!(select_seeds_greedy(&g, &[0.5; 4], &cfg(5, OracleMethod::GreedyCelf), &mut stream(0, 0)).is_err());
        assert!(select_seeds_ris(&g, &[0.5; 4], &cfg(5, OracleMethod::Ris), &mut stream(0, 0)).is_err());
    }

    #[test]
    fn ris_with_zero_probabilities_gives_singletons() {
        let g = crate::graph::power_law_digraph(50, 200, 2.5, 1).unwrap();
        let sets = sample_rr_sets(&g, &vec![0.0; 200], 50_000, &mut stream(1, 0));
        assert!((0..sets.len()).all(|i| sets.set(i).len() == 1));
        let sel = sets.greedy_cover(3);
        assert_eq!(sel.seeds.len(), 3);
        // picking the three most-hit nodes biases the estimate slightly upward
        assert!((sel.estimated_spread - 3.0).abs() < 0.5, "{}", sel.estimated_spread);
    }

    #[test]
    fn ris_on_strongly_connected_certain_graph() {
        let g = DirectedGraph::from_edges(4, vec![(0, 1), (1, 2), (2, 3), (3, 0)]).unwrap();
        let sets = sample_rr_sets(&g, &[1.0; 4], 100, &mut stream(1, 0));
        assert!((0..sets.len()).all(|i| sets.set(i).len() == 4));
        let sel = sets.greedy_cover(1);
        assert_eq!(sel.estimated_spread, 4.0);
    }

    #[test]
    fn ris_on_diamond() {
        let g = diamond();
        let c = OracleConfig {
            rr_set_floor: 100_000,
            rr_set_cap: 100_000,
            ..cfg(1, OracleMethod::Ris)
        };
        let sel = select_seeds_ris(&g, &[0.5; 4], &c, &mut stream(3, 0)).unwrap();
        assert_eq!(sel.seeds, vec![0]);
        assert!(
            (sel.estimated_spread - 2.4375).abs() / 2.4375 < 0.02,
            "{}",
            sel.estimated_spread
        );
    }

    #[test]
    fn rr_set_count_schedule() {
        let c = OracleConfig {
            k: 10,
            epsilon: 0.5,
            ell: 1.0,
            rr_set_floor: 10,
            rr_set_cap: 1_000_000,
            ..OracleConfig::default()
        };
        let expected = (11.0 * 100.0 * 100f64.ln() / 0.25).ceil() as usize;
        assert_eq!(rr_set_count(100, &c), expected);
        assert_eq!(rr_set_count(1, &c), 10);
        assert_eq!(
            rr_set_count(
                100,
                &OracleConfig {
                    rr_set_cap: 500,
                    ..c.clone()
                }
            ),
            500
        );
    }

    #[test]
    fn rr_sampling_is_thread_count_independent() {
        let g = crate::graph::power_law_digraph(200, 1500, 2.5, 3).unwrap();
        let p = crate::graph::assign_weighted_cascade(&g);
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| {
                    let s = sample_rr_sets(&g, p.probabilities(), 3000, &mut stream(8, 0));
                    (s.offsets, s.nodes)
                })
        };
        assert_eq!(run(1), run(3));
    }

    #[test]
    fn estimates_are_clamped() {
        assert_eq!(clamp_estimates(&[-0.5, 0.3, 1.7, f64::NAN]), vec![0.0, 0.3, 1.0, 0.0]);
    }

    #[test]
    fn config_validation() {
        assert!(OracleConfig {
            epsilon: 1.0,
            ..OracleConfig::default()
        }
        .validate()
        .is_err());
        assert!(OracleConfig {
            k: 0,
            ..OracleConfig::default()
        }
        .validate()
        .is_err());
        assert!(OracleConfig {
            rr_set_floor: 10,
            rr_set_cap: 5,
            ..OracleConfig::default()
        }
        .validate()
        .is_err());
    }

    #[test]
    fn auto_method_switches_on_edge_count() {
        let small = diamond();
        let big = crate::graph::power_law_digraph(200, 1500, 2.5, 3).unwrap();
        let c = OracleConfig::default();
        assert_eq!(c.resolve(&small), OracleMethod::GreedyCelf);
        assert_eq!(c.resolve(&big), OracleMethod::Ris);
    }
}
