//! Experiment driver: configuration, the online round loop, and result files.

pub mod config;
pub mod output;
pub mod runner;

pub use config::{ExperimentConfig, GeneratorKind, MemberSpec, StrategyKind, StrategySection};
pub use output::{content_hash, emit_results, merge_runs, write_csv, EmittedFiles, RunTable};
pub use runner::{
    build_policy, compute_optimal_baseline, load_graph, run_experiment, run_experiment_in, run_repetition, Baseline,
    Environment, Policy, RoundRecord, RunSummary,
};
