//! EXP3 meta-learner over base strategies.
//!
//! Each round one member is drawn from the mixed distribution `psi`, its
//! estimate drives the oracle, and the realized spread (scaled by the node
//! count) becomes the importance-weighted reward of the chosen member.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::cascade::CascadeOutcome;
use crate::error::{OimError, Result};
use crate::rng::StreamRng;
use crate::strategies::{Estimate, Learner};

/// Weights above this are divided by their maximum before recomputing `psi`.
pub const WEIGHT_RESCALE_LIMIT: f64 = 1e100;

pub const DEFAULT_GAMMA: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exp3State {
    weights: Vec<f64>,
    probs: Vec<f64>,
    gamma: f64,
}

impl Exp3State {
    /// Builds a state from explicit weights, mostly useful for tests and
    /// for restoring a serialized learner.
    pub fn from_weights(weights: Vec<f64>, gamma: f64) -> Result<Self> {
        check_gamma(gamma)?;
        if weights.is_empty() || weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(OimError::invalid("EXP3 weights must be finite and positive"));
        }
        let mut state = Exp3State {
            probs: vec![0.0; weights.len()],
            weights,
            gamma,
        };
        state.recompute();
        Ok(state)
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probs
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    fn recompute(&mut self) {
        let max = self.weights.iter().cloned().fold(0.0, f64::max);
        if max > WEIGHT_RESCALE_LIMIT {
            for w in &mut self.weights {
                *w /= max;
            }
        }
        let total: f64 = self.weights.iter().sum();
        let n = self.weights.len() as f64;
        for (p, w) in self.probs.iter_mut().zip(&self.weights) {
            *p = (1.0 - self.gamma) * w / total + self.gamma / n;
        }
    }
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(OimError::invalid(format!("EXP3 gamma {gamma} outside (0, 1]")));
    }
    Ok(())
}

pub fn exp3_init(n_strategies: usize, gamma: f64) -> Result<Exp3State> {
    if n_strategies < 2 {
        return Err(OimError::invalid(format!(
            "EXP3 needs at least two strategies, got {n_strategies}"
        )));
    }
    Exp3State::from_weights(vec![1.0; n_strategies], gamma)
}

pub fn exp3_sample<R: Rng + ?Sized>(state: &Exp3State, rng: &mut R) -> usize {
    // psi is a valid distribution by construction, so this cannot fail
    let dist = WeightedIndex::new(&state.probs).expect("EXP3 probabilities form a distribution");
    dist.sample(rng)
}

/// Rewards the chosen strategy with `g = spread / node_count`.
pub fn exp3_update(state: &mut Exp3State, spread: usize, node_count: usize, chosen: usize) -> Result<()> {
    if spread > node_count || node_count == 0 {
        return Err(OimError::invalid(format!(
            "spread {spread} must lie in [0, node_count = {node_count}]"
        )));
    }
    if chosen >= state.len() {
        return Err(OimError::invalid(format!(
            "chosen strategy {chosen} out of range for {} strategies",
            state.len()
        )));
    }
    let g = spread as f64 / node_count as f64;
    state.weights[chosen] *= (state.gamma * g / state.probs[chosen]).exp();
    state.recompute();
    Ok(())
}

/// Samples a member and returns its estimate with the chosen index.
pub fn run_ensemble_round(
    members: &mut [Box<dyn Learner>],
    state: &Exp3State,
    round: usize,
    rng: &mut StreamRng,
) -> Result<(Estimate, usize)> {
    if members.len() != state.len() {
        return Err(OimError::Dimension {
            expected: state.len(),
            actual: members.len(),
        });
    }
    let chosen = exp3_sample(state, rng);
    let est = members[chosen].estimate(round, rng)?;
    Ok((est, chosen))
}

/// A set of base strategies combined by EXP3.
pub struct Ensemble {
    members: Vec<Box<dyn Learner>>,
    exp3: Option<Exp3State>,
    node_count: usize,
    shared_updates: bool,
    chosen: Option<usize>,
}

impl Ensemble {
    /// With a single member the EXP3 layer is skipped entirely.
    pub fn new(members: Vec<Box<dyn Learner>>, gamma: f64, node_count: usize, shared_updates: bool) -> Result<Self> {
        check_gamma(gamma)?;
        let exp3 = match members.len() {
            0 => return Err(OimError::invalid("ensemble needs at least one member")),
            1 => None,
            n => Some(exp3_init(n, gamma)?),
        };
        Ok(Ensemble {
            members,
            exp3,
            node_count,
            shared_updates,
            chosen: None,
        })
    }

    pub fn exp3(&self) -> Option<&Exp3State> {
        self.exp3.as_ref()
    }

    pub fn members(&self) -> &[Box<dyn Learner>] {
        &self.members
    }
}

impl Learner for Ensemble {
    fn name(&self) -> String {
        let names: Vec<String> = self.members.iter().map(|m| m.name()).collect();
        format!("ensemble({})", names.join(","))
    }

    fn estimate(&mut self, round: usize, rng: &mut StreamRng) -> Result<Estimate> {
        let (est, chosen) = match &self.exp3 {
            Some(state) => run_ensemble_round(&mut self.members, state, round, rng)?,
            None => (self.members[0].estimate(round, rng)?, 0),
        };
        self.chosen = Some(chosen);
        Ok(est)
    }

    fn observe(&mut self, round: usize, outcome: &CascadeOutcome, rng: &mut StreamRng) -> Result<()> {
        let chosen = self
            .chosen
            .take()
            .ok_or_else(|| OimError::invalid("ensemble feedback received before an estimate"))?;
        for (i, m) in self.members.iter_mut().enumerate() {
            if self.shared_updates || i == chosen {
                m.observe(round, outcome, rng)?;
            }
        }
        if let Some(state) = &mut self.exp3 {
            exp3_update(state, outcome.spread(), self.node_count, chosen)?;
        }
        self.chosen = Some(chosen);
        Ok(())
    }

    fn member_names(&self) -> Vec<String> {
        self.members.iter().map(|m| m.name()).collect()
    }

    fn member_probabilities(&self) -> Option<Vec<f64>> {
        Some(match &self.exp3 {
            Some(s) => s.probabilities().to_vec(),
            None => vec![1.0],
        })
    }

    fn last_member(&self) -> Option<usize> {
        self.chosen
    }
}
