//! Stateful strategies driven by the experiment loop.

use std::sync::Arc;

use super::{
    beta_ts_sample, cucb_estimate, empirical_mean, epsilon_greedy_estimate, linthompson_sample,
    linthompson_ucb_estimate, linucb_estimate, linucb_update, random_explore, BetaPrior, EdgeStats, Estimate,
    LinearModelState,
};
use crate::cascade::CascadeOutcome;
use crate::error::{OimError, Result};
use crate::graph::{FeatureMap, TrueModel};
use crate::rng::StreamRng;

/// A per-round probability estimator with its own feedback statistics.
///
/// Each round the loop calls [`Learner::estimate`], hands the estimate to the
/// oracle, runs the true diffusion and then calls [`Learner::observe`].
pub trait Learner: Send {
    fn name(&self) -> String;

    fn estimate(&mut self, round: usize, rng: &mut StreamRng) -> Result<Estimate>;

    fn observe(&mut self, round: usize, outcome: &CascadeOutcome, rng: &mut StreamRng) -> Result<()>;

    /// Names of ensemble members, empty for base strategies.
    fn member_names(&self) -> Vec<String> {
        Vec::new()
    }

    /// Current member-selection distribution of an ensemble.
    fn member_probabilities(&self) -> Option<Vec<f64>> {
        None
    }

    /// Member used for the latest estimate.
    fn last_member(&self) -> Option<usize> {
        None
    }
}

fn check_default(default_value: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&default_value) {
        return Err(OimError::invalid(format!(
            "default estimate {default_value} outside [0, 1]"
        )));
    }
    Ok(default_value)
}

/// Empirical mean `N / T` (Exploit-Mean).
#[derive(Debug, Clone)]
pub struct ExploitMean {
    pub stats: EdgeStats,
    pub default_value: f64,
}

impl ExploitMean {
    pub fn new(edge_count: usize, default_value: f64) -> Result<Self> {
        Ok(ExploitMean {
            stats: EdgeStats::new(edge_count),
            default_value: check_default(default_value)?,
        })
    }
}

impl Learner for ExploitMean {
    fn name(&self) -> String {
        "exploit_mean".into()
    }

    fn estimate(&mut self, _round: usize, _rng: &mut StreamRng) -> Result<Estimate> {
        Ok(empirical_mean(&self.stats, self.default_value))
    }

    fn observe(&mut self, _round: usize, outcome: &CascadeOutcome, _rng: &mut StreamRng) -> Result<()> {
        self.stats.record_outcome(outcome);
        Ok(())
    }
}

/// Uniform random estimates, ignoring feedback (Explore-Rand).
#[derive(Debug, Clone)]
pub struct ExploreRand {
    edge_count: usize,
    lo: f64,
    hi: f64,
}

impl ExploreRand {
    pub fn new(edge_count: usize, lo: f64, hi: f64) -> Result<Self> {
        if !(0.0 <= lo && lo < hi && hi <= 1.0) {
            return Err(OimError::invalid(format!("need 0 <= lo < hi <= 1, got [{lo}, {hi})")));
        }
        Ok(ExploreRand { edge_count, lo, hi })
    }
}

impl Learner for ExploreRand {
    fn name(&self) -> String {
        "explore_rand".into()
    }

    fn estimate(&mut self, _round: usize, rng: &mut StreamRng) -> Result<Estimate> {
        random_explore(self.edge_count, self.lo, self.hi, rng)
    }

    fn observe(&mut self, _round: usize, _outcome: &CascadeOutcome, _rng: &mut StreamRng) -> Result<()> {
        Ok(())
    }
}

/// Empirical mean plus a `U[lo, hi)` perturbation per edge (Rand-Plus-Mean).
#[derive(Debug, Clone)]
pub struct RandPlusMean {
    pub stats: EdgeStats,
    default_value: f64,
    lo: f64,
    hi: f64,
}

impl RandPlusMean {
    pub fn new(edge_count: usize, default_value: f64, lo: f64, hi: f64) -> Result<Self> {
        ExploreRand::new(edge_count, lo, hi)?;
        Ok(RandPlusMean {
            stats: EdgeStats::new(edge_count),
            default_value: check_default(default_value)?,
            lo,
            hi,
        })
    }
}

impl Learner for RandPlusMean {
    fn name(&self) -> String {
        "rand_plus_mean".into()
    }

    fn estimate(&mut self, _round: usize, rng: &mut StreamRng) -> Result<Estimate> {
        let mean = empirical_mean(&self.stats, self.default_value);
        let noise = random_explore(self.stats.len(), self.lo, self.hi, rng)?;
        Ok(Estimate::clamped(
            mean.iter().zip(noise.iter()).map(|(m, r)| m + r).collect(),
        ))
    }

    fn observe(&mut self, _round: usize, outcome: &CascadeOutcome, _rng: &mut StreamRng) -> Result<()> {
        self.stats.record_outcome(outcome);
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Cucb {
    pub stats: EdgeStats,
    pub exploration_coeff: f64,
}

impl Cucb {
    pub fn new(edge_count: usize, exploration_coeff: f64) -> Result<Self> {
        if !(exploration_coeff >= 0.0) {
            return Err(OimError::invalid(format!(
                "CUCB coefficient {exploration_coeff} must be nonnegative"
            )));
        }
        Ok(Cucb {
            stats: EdgeStats::new(edge_count),
            exploration_coeff,
        })
    }
}

impl Learner for Cucb {
    fn name(&self) -> String {
        "cucb".into()
    }

    fn estimate(&mut self, round: usize, _rng: &mut StreamRng) -> Result<Estimate> {
        cucb_estimate(&self.stats, round, self.exploration_coeff)
    }

    fn observe(&mut self, _round: usize, outcome: &CascadeOutcome, _rng: &mut StreamRng) -> Result<()> {
        self.stats.record_outcome(outcome);
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct EpsilonGreedy {
    pub stats: EdgeStats,
    c: f64,
    default_value: f64,
}

impl EpsilonGreedy {
    pub fn new(edge_count: usize, c: f64, default_value: f64) -> Result<Self> {
        if !(c > 0.0) {
            return Err(OimError::invalid(format!(
                "epsilon-greedy constant c = {c} must be positive"
            )));
        }
        Ok(EpsilonGreedy {
            stats: EdgeStats::new(edge_count),
            c,
            default_value: check_default(default_value)?,
        })
    }
}

impl Learner for EpsilonGreedy {
    fn name(&self) -> String {
        "epsilon_greedy".into()
    }

    fn estimate(&mut self, round: usize, rng: &mut StreamRng) -> Result<Estimate> {
        Ok(epsilon_greedy_estimate(&self.stats, round, self.c, self.default_value, rng)?.0)
    }

    fn observe(&mut self, _round: usize, outcome: &CascadeOutcome, _rng: &mut StreamRng) -> Result<()> {
        self.stats.record_outcome(outcome);
        Ok(())
    }
}

/// Independent Beta posterior sampling per edge.
#[derive(Debug, Clone)]
pub struct BetaThompson {
    pub stats: EdgeStats,
    pub prior: BetaPrior,
}

impl BetaThompson {
    pub fn new(edge_count: usize, prior: BetaPrior) -> Self {
        BetaThompson {
            stats: EdgeStats::new(edge_count),
            prior,
        }
    }
}

impl Learner for BetaThompson {
    fn name(&self) -> String {
        "beta_ts".into()
    }

    fn estimate(&mut self, _round: usize, rng: &mut StreamRng) -> Result<Estimate> {
        Ok(beta_ts_sample(&self.stats, &self.prior, rng))
    }

    fn observe(&mut self, _round: usize, outcome: &CascadeOutcome, _rng: &mut StreamRng) -> Result<()> {
        self.stats.record_outcome(outcome);
        Ok(())
    }
}

/// Reports the true probabilities; the zero-regret reference.
#[derive(Debug, Clone)]
pub struct TruthOracle {
    probabilities: Vec<f64>,
}

impl TruthOracle {
    pub fn new(model: &TrueModel) -> Self {
        TruthOracle {
            probabilities: model.probabilities().to_vec(),
        }
    }
}

impl Learner for TruthOracle {
    fn name(&self) -> String {
        "oracle_true".into()
    }

    fn estimate(&mut self, _round: usize, _rng: &mut StreamRng) -> Result<Estimate> {
        Ok(Estimate::clamped(self.probabilities.clone()))
    }

    fn observe(&mut self, _round: usize, _outcome: &CascadeOutcome, _rng: &mut StreamRng) -> Result<()> {
        Ok(())
    }
}

fn check_feature_dim(state: &LinearModelState, features: &FeatureMap) -> Result<()> {
    if state.dim() != features.dim() {
        return Err(OimError::Dimension {
            expected: state.dim(),
            actual: features.dim(),
        });
    }
    Ok(())
}

/// Adds the Gram contribution of every edge that was not observed, for the
/// variant whose Gram update runs over the whole edge set.
fn add_unobserved_to_gram(state: &mut LinearModelState, features: &FeatureMap, outcome: &CascadeOutcome) -> Result<()> {
    let mut seen = vec![false; features.edge_count()];
    for &(e, _) in &outcome.observed {
        seen[e] = true;
    }
    state.add_gram_only(
        (0..features.edge_count())
            .filter(|&e| !seen[e])
            .map(|e| features.edge(e)),
    )
}

/// Linear UCB on edge features, regressing on observed activation bits.
#[derive(Debug, Clone)]
pub struct ImLinUcb {
    pub state: LinearModelState,
    features: Arc<FeatureMap>,
    delta: f64,
    gram_all_edges: bool,
}

impl ImLinUcb {
    pub fn new(state: LinearModelState, features: Arc<FeatureMap>, delta: f64, gram_all_edges: bool) -> Result<Self> {
        check_feature_dim(&state, &features)?;
        state.confidence_radius(delta)?;
        Ok(ImLinUcb {
            state,
            features,
            delta,
            gram_all_edges,
        })
    }
}

impl Learner for ImLinUcb {
    fn name(&self) -> String {
        "imlinucb".into()
    }

    fn estimate(&mut self, _round: usize, _rng: &mut StreamRng) -> Result<Estimate> {
        linucb_estimate(&self.state, &self.features, self.delta)
    }

    fn observe(&mut self, _round: usize, outcome: &CascadeOutcome, _rng: &mut StreamRng) -> Result<()> {
        let obs: Vec<(&[f64], f64)> = outcome
            .observed
            .iter()
            .map(|&(e, bit)| (self.features.edge(e), if bit { 1.0 } else { 0.0 }))
            .collect();
        linucb_update(&mut self.state, &obs)?;
        if self.gram_all_edges {
            add_unobserved_to_gram(&mut self.state, &self.features, outcome)?;
        }
        Ok(())
    }
}

/// What the linear model of [`LinThompson`] regresses on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegressionTarget {
    /// A draw from the edge's Beta posterior after the update.
    Sampled,
    /// The observed activation bit.
    Bit,
}

/// Contextual Thompson sampling on edge features.
///
/// Feedback first updates per-edge Beta posteriors; the regression target of
/// each observed edge is then a posterior draw (or the raw bit). Estimates
/// come from a Gaussian draw of the coefficient vector, optionally widened by
/// the UCB confidence term (LinThompsonUCB).
#[derive(Debug, Clone)]
pub struct LinThompson {
    pub state: LinearModelState,
    pub stats: EdgeStats,
    features: Arc<FeatureMap>,
    prior: BetaPrior,
    target: RegressionTarget,
    with_ucb: bool,
    delta: f64,
    gram_all_edges: bool,
}

impl LinThompson {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        state: LinearModelState,
        features: Arc<FeatureMap>,
        prior: BetaPrior,
        target: RegressionTarget,
        with_ucb: bool,
        delta: f64,
        gram_all_edges: bool,
    ) -> Result<Self> {
        check_feature_dim(&state, &features)?;
        state.confidence_radius(delta)?;
        Ok(LinThompson {
            state,
            stats: EdgeStats::new(features.edge_count()),
            features,
            prior,
            target,
            with_ucb,
            delta,
            gram_all_edges,
        })
    }
}

impl Learner for LinThompson {
    fn name(&self) -> String {
        if self.with_ucb {
            "lin_thompson_ucb"
        } else {
            "lin_thompson"
        }
        .into()
    }

    fn estimate(&mut self, round: usize, rng: &mut StreamRng) -> Result<Estimate> {
        self.state.begin_round(round);
        if self.with_ucb {
            linthompson_ucb_estimate(&self.state, &self.features, self.delta, rng)
        } else {
            linthompson_sample(&self.state, &self.features, rng)
        }
    }

    fn observe(&mut self, _round: usize, outcome: &CascadeOutcome, rng: &mut StreamRng) -> Result<()> {
        let mut obs = Vec::with_capacity(outcome.observed.len());
        for &(e, bit) in &outcome.observed {
            self.stats.record(e, bit);
            let w = match self.target {
                RegressionTarget::Sampled => self.prior.sample(self.stats.n(e), self.stats.t(e), rng),
                RegressionTarget::Bit => bit as u8 as f64,
            };
            obs.push((self.features.edge(e), w));
        }
        linucb_update(&mut self.state, &obs)?;
        if self.gram_all_edges {
            add_unobserved_to_gram(&mut self.state, &self.features, outcome)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{laplacian_features, DirectedGraph};
    use crate::rng::stream;

    fn outcome(observed: Vec<(usize, bool)>) -> CascadeOutcome {
        CascadeOutcome {
            activated: vec![0],
            observed,
        }
    }

    #[test]
    fn exploit_mean_tracks_feedback() {
        let mut l = ExploitMean::new(3, 0.5).unwrap();
        let mut rng = stream(0, 0);
        l.observe(1, &outcome(vec![(0, true), (1, false)]), &mut rng).unwrap();
        l.observe(2, &outcome(vec![(0, false)]), &mut rng).unwrap();
        assert_eq!(l.estimate(3, &mut rng).unwrap().as_slice(), &[0.5, 0.0, 0.5]);
    }

    #[test]
    fn rand_plus_mean_adds_small_noise() {
        let mut l = RandPlusMean::new(2, 0.5, 0.0, 0.01).unwrap();
        let mut rng = stream(0, 0);
        l.observe(1, &outcome(vec![(0, true)]), &mut rng).unwrap();
        let est = l.estimate(2, &mut rng).unwrap();
        assert_eq!(est[0], 1.0);
        assert!(est[1] >= 0.5 && est[1] < 0.51);
    }

    #[test]
    fn lin_thompson_keeps_residual_invariant() {
        let g = crate::graph::power_law_digraph(30, 120, 2.5, 1).unwrap();
        let f = Arc::new(laplacian_features(&g, 4).unwrap());
        let state = LinearModelState::new(4, 1.0, 0.5, 0.05).unwrap();
        let mut l = LinThompson::new(
            state,
            f,
            BetaPrior::default(),
            RegressionTarget::Sampled,
            true,
            0.05,
            false,
        )
        .unwrap();
        let mut rng = stream(3, 0);
        let probs = crate::graph::assign_weighted_cascade(&g);
        for t in 1..=10 {
            let est = l.estimate(t, &mut rng).unwrap();
            assert_eq!(est.len(), 120);
            let out = crate::cascade::simulate_cascade(&g, probs.probabilities(), &[0, 1, 2], &mut rng).unwrap();
            l.observe(t, &out, &mut rng).unwrap();
            assert!(l.state.residual_norm() < 1e-8);
        }
        assert_eq!(l.stats.total_observations(), l.state.observations());
    }

    #[test]
    fn gram_all_edges_variant_grows_faster() {
        let g = DirectedGraph::from_edges(3, vec![(0, 1), (1, 2), (2, 0)]).unwrap();
        let f = Arc::new(laplacian_features(&g, 2).unwrap());
        let mk = |all| ImLinUcb::new(LinearModelState::new(2, 1.0, 0.5, 0.05).unwrap(), f.clone(), 0.05, all).unwrap();
        let (mut a, mut b) = (mk(false), mk(true));
        let mut rng = stream(0, 0);
        let out = outcome(vec![(0, true)]);
        a.observe(1, &out, &mut rng).unwrap();
        b.observe(1, &out, &mut rng).unwrap();
        assert!(b.state.log_det() > a.state.log_det());
        assert_eq!(a.state.response(), b.state.response());
    }

    #[test]
    fn feature_dimension_must_match() {
        let g = DirectedGraph::from_edges(3, vec![(0, 1), (1, 2)]).unwrap();
        let f = Arc::new(laplacian_features(&g, 2).unwrap());
        let state = LinearModelState::new(3, 1.0, 0.5, 0.05).unwrap();
        assert!(ImLinUcb::new(state, f, 0.05, false).is_err());
    }
}
