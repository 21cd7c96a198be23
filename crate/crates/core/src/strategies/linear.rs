//! Ridge-regression state shared by the contextual estimators (IMLinUCB,
//! LinThompson, LinThompsonUCB).

use rand::Rng;
use rand_distr::StandardNormal;

use super::linalg::{dot, mat_vec, Cholesky};
use super::Estimate;
use crate::error::{OimError, Result};
use crate::graph::FeatureMap;

/// Gram matrix `V = lambda I + sum x x^T`, response `Y = sum x w` and the
/// ridge estimate `theta_hat = V^{-1} Y`, plus the Thompson-sampling scale.
#[derive(Debug, Clone)]
pub struct LinearModelState {
    dim: usize,
    lambda: f64,
    gram: Vec<f64>,
    response: Vec<f64>,
    theta_hat: Vec<f64>,
    chol: Cholesky,
    /// Sub-Gaussian noise scale `R`.
    noise_r: f64,
    /// Confidence parameter of the Thompson scale.
    delta: f64,
    ts_scale: f64,
    observations: u64,
}

impl LinearModelState {
    pub fn new(dim: usize, lambda: f64, noise_r: f64, delta: f64) -> Result<Self> {
        if dim == 0 {
            return Err(OimError::invalid("linear model dimension must be positive"));
        }
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(OimError::invalid(format!("ridge lambda {lambda} must be positive")));
        }
        if !(noise_r >= 0.0) {
            return Err(OimError::invalid(format!(
                "noise scale R = {noise_r} must be nonnegative"
            )));
        }
        check_delta(delta)?;
        let mut gram = vec![0.0; dim * dim];
        for i in 0..dim {
            gram[i * dim + i] = lambda;
        }
        let chol = Cholesky::factor(&gram, dim)?;
        let mut state = LinearModelState {
            dim,
            lambda,
            gram,
            response: vec![0.0; dim],
            theta_hat: vec![0.0; dim],
            chol,
            noise_r,
            delta,
            ts_scale: 0.0,
            observations: 0,
        };
        state.begin_round(1);
        Ok(state)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn gram(&self) -> &[f64] {
        &self.gram
    }

    pub fn response(&self) -> &[f64] {
        &self.response
    }

    pub fn theta_hat(&self) -> &[f64] {
        &self.theta_hat
    }

    pub fn observations(&self) -> u64 {
        self.observations
    }

    pub fn log_det(&self) -> f64 {
        self.chol.log_det()
    }

    /// Thompson-sampling scale `v` currently in effect.
    pub fn ts_scale(&self) -> f64 {
        self.ts_scale
    }

    /// Overrides `v` directly.
    pub fn set_ts_scale(&mut self, v: f64) -> Result<()> {
        if !(v >= 0.0) {
            return Err(OimError::invalid(format!("Thompson scale {v} must be nonnegative")));
        }
        self.ts_scale = v;
        Ok(())
    }

    /// Sets `v = R sqrt(9 d ln(t / delta))` for round `t >= 1`.
    pub fn begin_round(&mut self, t: usize) {
        let t = t.max(1) as f64;
        self.ts_scale = self.noise_r * (9.0 * self.dim as f64 * (t / self.delta).ln()).max(0.0).sqrt();
    }

    /// `beta = sqrt(lambda) + sqrt(ln(det V / (lambda^d delta^2)))`.
    pub fn confidence_radius(&self, delta: f64) -> Result<f64> {
        check_delta(delta)?;
        let inner = self.log_det() - self.dim as f64 * self.lambda.ln() - 2.0 * delta.ln();
        if !inner.is_finite() {
            return Err(OimError::Numeric(format!("non-finite log-determinant term {inner}")));
        }
        // Rounding can push the exact-zero case slightly negative.
        Ok(self.lambda.sqrt() + inner.max(0.0).sqrt())
    }

    /// `||x||_{V^{-1}}`.
    pub fn width(&self, x: &[f64]) -> f64 {
        self.chol.inverse_quadratic_form(x).max(0.0).sqrt()
    }

    /// `||V theta_hat - Y||`.
    pub fn residual_norm(&self) -> f64 {
        mat_vec(&self.gram, self.dim, &self.theta_hat)
            .iter()
            .zip(&self.response)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    fn check_len(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(OimError::Dimension {
                expected: self.dim,
                actual: x.len(),
            });
        }
        Ok(())
    }

    fn add_outer(&mut self, x: &[f64]) {
        let d = self.dim;
        for i in 0..d {
            for j in 0..d {
                self.gram[i * d + j] += x[i] * x[j];
            }
        }
    }

    fn refresh(&mut self) -> Result<()> {
        self.chol = Cholesky::factor(&self.gram, self.dim)?;
        self.theta_hat = self.chol.solve(&self.response);
        Ok(())
    }

    /// Adds `x x^T` to the Gram matrix without touching the response.
    pub fn add_gram_only<'a>(&mut self, xs: impl IntoIterator<Item = &'a [f64]>) -> Result<()> {
        let xs: Vec<&[f64]> = xs.into_iter().collect();
        for x in &xs {
            self.check_len(x)?;
        }
        if xs.is_empty() {
            return Ok(());
        }
        for x in xs {
            self.add_outer(x);
        }
        self.refresh()
    }

    /// Draws `theta ~ N(theta_hat, v^2 V^{-1})` as `theta_hat + v L^{-T} z`.
    pub fn sample_theta<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let z: Vec<f64> = (0..self.dim).map(|_| rng.sample(StandardNormal)).collect();
        let noise = self.chol.backward(&z);
        self.theta_hat
            .iter()
            .zip(noise)
            .map(|(m, n)| m + self.ts_scale * n)
            .collect()
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(OimError::invalid(format!("delta {delta} outside (0, 1]")));
    }
    Ok(())
}

fn check_features(state: &LinearModelState, features: &FeatureMap) -> Result<()> {
    if features.dim() != state.dim() {
        return Err(OimError::Dimension {
            expected: state.dim(),
            actual: features.dim(),
        });
    }
    Ok(())
}

/// Adds `sum x x^T` to the Gram matrix and `sum x w` to the response, then
/// recomputes `theta_hat`. An empty batch leaves the state untouched.
pub fn linucb_update(state: &mut LinearModelState, observations: &[(&[f64], f64)]) -> Result<()> {
    for (x, _) in observations {
        state.check_len(x)?;
    }
    if observations.is_empty() {
        return Ok(());
    }
    for &(x, w) in observations {
        state.add_outer(x);
        for (r, xi) in state.response.iter_mut().zip(x) {
            *r += xi * w;
        }
    }
    state.observations += observations.len() as u64;
    state.refresh()
}

/// Upper confidence bound `theta_hat^T x + beta ||x||_{V^{-1}}` per edge.
pub fn linucb_estimate(state: &LinearModelState, features: &FeatureMap, delta: f64) -> Result<Estimate> {
    check_features(state, features)?;
    let beta = state.confidence_radius(delta)?;
    let values = (0..features.edge_count())
        .map(|e| {
            let x = features.edge(e);
            dot(state.theta_hat(), x) + beta * state.width(x)
        })
        .collect();
    Ok(Estimate::clamped(values))
}

/// `theta_tilde^T x` per edge with one posterior draw `theta_tilde`.
pub fn linthompson_sample<R: Rng + ?Sized>(
    state: &LinearModelState,
    features: &FeatureMap,
    rng: &mut R,
) -> Result<Estimate> {
    check_features(state, features)?;
    let theta = state.sample_theta(rng);
    let values = (0..features.edge_count())
        .map(|e| dot(&theta, features.edge(e)))
        .collect();
    Ok(Estimate::clamped(values))
}

/// `theta_tilde^T x + beta ||x||_{V^{-1}}` per edge.
pub fn linthompson_ucb_estimate<R: Rng + ?Sized>(
    state: &LinearModelState,
    features: &FeatureMap,
    delta: f64,
    rng: &mut R,
) -> Result<Estimate> {
    check_features(state, features)?;
    let beta = state.confidence_radius(delta)?;
    let theta = state.sample_theta(rng);
    let values = (0..features.edge_count())
        .map(|e| {
            let x = features.edge(e);
            dot(&theta, x) + beta * state.width(x)
        })
        .collect();
    Ok(Estimate::clamped(values))
}
