//! Per-round influence-probability estimators.
//!
//! The free functions are the estimation rules themselves; [`learners`] wraps
//! them into stateful [`Learner`]s that the experiment loop drives.

pub mod learners;
pub mod linalg;
mod linear;

pub use learners::{
    BetaThompson, Cucb, EpsilonGreedy, ExploitMean, ExploreRand, ImLinUcb, Learner, LinThompson, RandPlusMean,
    RegressionTarget, TruthOracle,
};
pub use linear::{linthompson_sample, linthompson_ucb_estimate, linucb_estimate, linucb_update, LinearModelState};

use std::ops::Deref;

use rand::Rng;
use rand_distr::{Beta, Distribution};

use crate::cascade::CascadeOutcome;
use crate::error::{OimError, Result};
use crate::graph::EdgeId;

/// Per-edge probability estimates, always within `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Estimate(Vec<f64>);

impl Estimate {
    /// Clamps every value into `[0, 1]`; NaN becomes 0.
    pub fn clamped(mut values: Vec<f64>) -> Self {
        for v in &mut values {
            *v = if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) };
        }
        Estimate(values)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for Estimate {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Semi-bandit sufficient statistics: `t_count` observations and `n_count`
/// successes per edge.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeStats {
    t_count: Vec<u64>,
    n_count: Vec<u64>,
}

impl EdgeStats {
    pub fn new(edge_count: usize) -> Self {
        EdgeStats {
            t_count: vec![0; edge_count],
            n_count: vec![0; edge_count],
        }
    }

    /// Builds statistics from explicit counts; requires `n <= t` per edge.
    pub fn from_counts(t_count: Vec<u64>, n_count: Vec<u64>) -> Result<Self> {
        if t_count.len() != n_count.len() {
            return Err(OimError::Dimension {
                expected: t_count.len(),
                actual: n_count.len(),
            });
        }
        if let Some(e) = (0..t_count.len()).find(|&e| n_count[e] > t_count[e]) {
            return Err(OimError::invalid(format!(
                "edge {e}: {} successes exceed {} observations",
                n_count[e], t_count[e]
            )));
        }
        Ok(EdgeStats { t_count, n_count })
    }

    pub fn len(&self) -> usize {
        self.t_count.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t_count.is_empty()
    }

    pub fn t(&self, e: EdgeId) -> u64 {
        self.t_count[e]
    }

    pub fn n(&self, e: EdgeId) -> u64 {
        self.n_count[e]
    }

    pub fn record(&mut self, e: EdgeId, activated: bool) {
        self.t_count[e] += 1;
        self.n_count[e] += activated as u64;
    }

    /// Records every observed edge of a diffusion; returns how many.
    pub fn record_outcome(&mut self, outcome: &CascadeOutcome) -> usize {
        for &(e, bit) in &outcome.observed {
            self.record(e, bit);
        }
        outcome.observed.len()
    }

    pub fn total_observations(&self) -> u64 {
        self.t_count.iter().sum()
    }
}

/// `n / t` per edge, or `default_value` where the edge was never observed.
pub fn empirical_mean(stats: &EdgeStats, default_value: f64) -> Estimate {
    let values = (0..stats.len())
        .map(|e| match stats.t(e) {
            0 => default_value,
            t => stats.n(e) as f64 / t as f64,
        })
        .collect();
    Estimate::clamped(values)
}

/// Independent `U[lo, hi)` draw per edge.
pub fn random_explore<R: Rng + ?Sized>(edge_count: usize, lo: f64, hi: f64, rng: &mut R) -> Result<Estimate> {
    if !(0.0 <= lo && lo < hi && hi <= 1.0) {
        return Err(OimError::invalid(format!("need 0 <= lo < hi <= 1, got [{lo}, {hi})")));
    }
    Ok(Estimate::clamped(
        (0..edge_count).map(|_| rng.random_range(lo..hi)).collect(),
    ))
}

/// CUCB index `mean + coeff sqrt(3 ln t / (2 T))`; unobserved edges get 1.
pub fn cucb_estimate(stats: &EdgeStats, round: usize, exploration_coeff: f64) -> Result<Estimate> {
    if round == 0 {
        return Err(OimError::invalid("CUCB rounds start at 1"));
    }
    let log_t = (round as f64).ln();
    let values = (0..stats.len())
        .map(|e| match stats.t(e) {
            0 => 1.0,
            t => {
                let t = t as f64;
                stats.n(e) as f64 / t + exploration_coeff * (3.0 * log_t / (2.0 * t)).sqrt()
            }
        })
        .collect();
    Ok(Estimate::clamped(values))
}

/// `min(1, c / t)`.
pub fn epsilon_greedy_explore_probability(c: f64, round: usize) -> f64 {
    (c / round as f64).min(1.0)
}

/// With probability `min(1, c / t)` explores with `U[0, 1)` estimates,
/// otherwise exploits the empirical mean. Returns whether it explored.
pub fn epsilon_greedy_estimate<R: Rng + ?Sized>(
    stats: &EdgeStats,
    round: usize,
    c: f64,
    default_value: f64,
    rng: &mut R,
) -> Result<(Estimate, bool)> {
    if !(c > 0.0) {
        return Err(OimError::invalid(format!(
            "epsilon-greedy constant c = {c} must be positive"
        )));
    }
    if round == 0 {
        return Err(OimError::invalid("epsilon-greedy rounds start at 1"));
    }
    if rng.random::<f64>() < epsilon_greedy_explore_probability(c, round) {
        Ok((random_explore(stats.len(), 0.0, 1.0, rng)?, true))
    } else {
        Ok((empirical_mean(stats, default_value), false))
    }
}

/// Beta prior on each edge's probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaPrior {
    pub alpha: f64,
    pub beta: f64,
}

impl Default for BetaPrior {
    fn default() -> Self {
        BetaPrior { alpha: 1.0, beta: 1.0 }
    }
}

impl BetaPrior {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 0.0 && beta > 0.0) || !alpha.is_finite() || !beta.is_finite() {
            return Err(OimError::invalid(format!(
                "Beta prior ({alpha}, {beta}) must be positive"
            )));
        }
        Ok(BetaPrior { alpha, beta })
    }

    /// Conjugate posterior `(alpha + n, beta + t - n)`.
    pub fn posterior(&self, n: u64, t: u64) -> (f64, f64) {
        (self.alpha + n as f64, self.beta + (t - n) as f64)
    }

    pub fn sample<R: Rng + ?Sized>(&self, n: u64, t: u64, rng: &mut R) -> f64 {
        let (a, b) = self.posterior(n, t);
        Beta::new(a, b).expect("posterior parameters are positive").sample(rng)
    }
}

/// One independent posterior draw per edge.
pub fn beta_ts_sample<R: Rng + ?Sized>(stats: &EdgeStats, prior: &BetaPrior, rng: &mut R) -> Estimate {
    let values = (0..stats.len())
        .map(|e| prior.sample(stats.n(e), stats.t(e), rng))
        .collect();
    Estimate::clamped(values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    fn stats(pairs: &[(u64, u64)]) -> EdgeStats {
        EdgeStats::from_counts(pairs.iter().map(|p| p.1).collect(), pairs.iter().map(|p| p.0).collect()).unwrap()
    }

    #[test]
    fn empirical_mean_examples() {
        let s = stats(&[(3, 4), (0, 0), (0, 7)]);
        assert_eq!(empirical_mean(&s, 0.5).as_slice(), &[0.75, 0.5, 0.0]);
    }

    #[test]
    fn edge_stats_reject_inconsistent_counts() {
        assert!(EdgeStats::from_counts(vec![1], vec![2]).is_err());
    }

    #[test]
    fn random_explore_range_and_determinism() {
        let a = random_explore(1000, 0.0, 0.01, &mut stream(1, 0)).unwrap();
        assert!(a.iter().all(|&p| (0.0..0.01).contains(&p)));
        let b = random_explore(1000, 0.0, 0.01, &mut stream(1, 0)).unwrap();
        assert_eq!(a, b);
        let full = random_explore(1000, 0.0, 1.0, &mut stream(2, 0)).unwrap();
        assert!(full.iter().any(|&p| p > 0.5));
        assert!(random_explore(3, 0.5, 0.5, &mut stream(1, 0)).is_err());
        assert!(random_explore(3, 0.2, 1.5, &mut stream(1, 0)).is_err());
    }

    #[test]
    fn cucb_examples() {
        let s = stats(&[(0, 0), (1, 2), (500_000, 1_000_000)]);
        let round = (2.0f64).exp().round() as usize;
        let est = cucb_estimate(&s, round, 1.0).unwrap();
        assert_eq!(est[0], 1.0);
        // The bonus at t = e^2 is sqrt(1.5); with t = 7 it still exceeds 0.5.
        assert_eq!(est[1], 1.0);
        assert!((est[2] - 0.5).abs() < 0.01);
        assert!(cucb_estimate(&s, 0, 1.0).is_err());
    }

    #[test]
    fn cucb_bonus_formula() {
        // n = 1, T = 4, t = 100, coeff 0.1: 0.25 + 0.1 sqrt(3 ln 100 / 8).
        let s = stats(&[(1, 4)]);
        let want = 0.25 + 0.1 * (3.0 * 100f64.ln() / 8.0).sqrt();
        assert!((cucb_estimate(&s, 100, 0.1).unwrap()[0] - want).abs() < 1e-15);
        // At t = e^2, the scalar bonus is sqrt(3 * 2 / 4) = sqrt(1.5) and 0.5 + 1.22 clamps.
        let at_e2 = 0.5 + (3.0 * 2.0 / (2.0 * 2.0f64)).sqrt();
        assert!((at_e2 - 1.724744871391589).abs() < 1e-12);
    }

    #[test]
    fn epsilon_schedule() {
        assert!((epsilon_greedy_explore_probability(0.1, 1) - 0.1).abs() < 1e-15);
        assert!((epsilon_greedy_explore_probability(0.1, 10) - 0.01).abs() < 1e-15);
        assert_eq!(epsilon_greedy_explore_probability(10.0, 1), 1.0);
    }

    #[test]
    fn epsilon_greedy_explore_rate() {
        let s = stats(&[(1, 2); 4]);
        let mut rng = stream(6, 0);
        let n = 20_000;
        let explored = (0..n)
            .filter(|_| epsilon_greedy_estimate(&s, 1, 0.1, 0.5, &mut rng).unwrap().1)
            .count() as f64;
        let se = (0.1 * 0.9 / n as f64).sqrt();
        assert!((explored / n as f64 - 0.1).abs() < 3.0 * se);
        let (always, explored) = epsilon_greedy_estimate(&s, 1, 10.0, 0.5, &mut rng).unwrap();
        assert!(explored && always.len() == 4);
    }

    #[test]
    fn beta_posterior_and_mean() {
        let prior = BetaPrior::default();
        assert_eq!(prior.posterior(2, 5), (3.0, 4.0));
        let mut rng = stream(4, 0);
        let n = 100_000;
        let mean = (0..n).map(|_| prior.sample(2, 5, &mut rng)).sum::<f64>() / n as f64;
        // Var Beta(3, 4) = 12 / (49 * 8).
        let se = (12.0 / (49.0 * 8.0) / n as f64).sqrt();
        assert!((mean - 3.0 / 7.0).abs() < 3.0 * se);
    }

    #[test]
    fn beta_flat_prior_is_uniform() {
        let s = EdgeStats::new(50_000);
        let est = beta_ts_sample(&s, &BetaPrior::default(), &mut stream(8, 0));
        let below_quarter = est.iter().filter(|&&p| p < 0.25).count() as f64 / 50_000.0;
        assert!((below_quarter - 0.25).abs() < 3.0 * (0.25 * 0.75 / 50_000.0f64).sqrt());
    }

    #[test]
    fn beta_concentrates_with_data() {
        let s = stats(&[(1_000_000, 1_000_000); 100]);
        let est = beta_ts_sample(&s, &BetaPrior::default(), &mut stream(2, 0));
        assert!(est.iter().all(|&p| p > 0.99));
    }

    #[test]
    fn beta_prior_validation() {
        assert!(BetaPrior::new(0.0, 1.0).is_err());
        assert!(BetaPrior::new(1.0, -1.0).is_err());
    }

    #[test]
    fn estimates_are_clamped() {
        assert_eq!(
            Estimate::clamped(vec![-1.0, 2.0, f64::NAN, 0.3]).as_slice(),
            &[0.0, 1.0, 0.0, 0.3]
        );
    }
}
