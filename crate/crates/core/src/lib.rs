//! Online influence maximization under edge-level semi-bandit feedback.
//!
//! The crate is organised around the round loop of an online influence
//! maximization experiment:
//!
//! - [`graph`]: topology, edge-list ingestion, weighted-cascade ground truth
//!   and Laplacian edge features.
//! - [`cascade`]: independent-cascade simulation with edge-level feedback,
//!   exact and Monte-Carlo spread evaluation.
//! - [`oracle`]: offline seed selection (lazy greedy and reverse-reachable
//!   set sampling).
//! - [`strategies`]: per-round probability estimators (empirical mean, CUCB,
//!   epsilon-greedy, Beta Thompson sampling, IMLinUCB, LinThompson and
//!   LinThompsonUCB).
//! - [`ensemble`]: the EXP3 meta-learner that mixes base strategies.
//! - [`harness`]: experiment configuration, the round loop, regret
//!   accounting and result files.

// `!(x > 0.0)` is used on purpose so that NaN parameters are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cascade;
pub mod ensemble;
pub mod error;
pub mod graph;
pub mod harness;
pub mod oracle;
pub mod rng;
pub mod strategies;

pub use error::{OimError, Result};
