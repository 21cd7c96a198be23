//! The online round loop and regret accounting.

use std::sync::Arc;
use std::time::Instant;

use rand::seq::index;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, GeneratorKind, StrategyKind, StrategySection};
use crate::cascade::{exact_spread, monte_carlo_spread_seeded, CascadeSimulator, EXACT_EDGE_LIMIT};
use crate::ensemble::Ensemble;
use crate::error::{OimError, Result};
use crate::graph::{
    assign_weighted_cascade, laplacian_features, load_edge_list_path, power_law_digraph, small_world_digraph,
    DirectedGraph, EdgeListOptions, FeatureMap, LoadReport, NodeId, TrueModel,
};
use crate::oracle::{select_seeds, OracleConfig};
use crate::rng::{self, derive_seed, StreamRng};
use crate::strategies::{
    BetaPrior, BetaThompson, Cucb, EpsilonGreedy, ExploitMean, ExploreRand, ImLinUcb, Learner, LinThompson,
    LinearModelState, RandPlusMean, TruthOracle,
};

const BASELINE_LABEL: u64 = 0xb45e;
const REPETITION_LABEL: u64 = 0x4e9;

/// Oracle seeds on the true probabilities and their expected spread.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Baseline {
    pub seeds: Vec<NodeId>,
    pub f_opt: f64,
    /// Standard error of `f_opt`; zero when computed exactly.
    pub std_error: f64,
    pub exact: bool,
}

pub fn compute_optimal_baseline(
    graph: &DirectedGraph,
    truth: &TrueModel,
    oracle: &OracleConfig,
    mc_samples: usize,
    rng: &mut StreamRng,
) -> Result<Baseline> {
    use rand::Rng;
    let selection = select_seeds(graph, truth.probabilities(), oracle, rng)?;
    let seeds = selection.seeds;
    if graph.edge_count() <= EXACT_EDGE_LIMIT {
        let f_opt = exact_spread(graph, truth.probabilities(), &seeds)?;
        return Ok(Baseline {
            seeds,
            f_opt,
            std_error: 0.0,
            exact: true,
        });
    }
    let est = monte_carlo_spread_seeded(graph, truth.probabilities(), &seeds, mc_samples, rng.random())?;
    Ok(Baseline {
        seeds,
        f_opt: est.mean,
        std_error: est.std_error,
        exact: false,
    })
}

/// Everything shared by the repetitions of one experiment.
#[derive(Debug, Clone)]
pub struct Environment {
    pub graph: Arc<DirectedGraph>,
    pub truth: TrueModel,
    pub features: Option<Arc<FeatureMap>>,
    pub load_report: Option<LoadReport>,
}

impl Environment {
    pub fn from_config(cfg: &ExperimentConfig) -> Result<Self> {
        let (graph, load_report) = load_graph(cfg)?;
        let truth = assign_weighted_cascade(&graph);
        let features = if cfg.strategy.needs_features()? {
            Some(Arc::new(laplacian_features(&graph, cfg.graph.feature_dim)?))
        } else {
            None
        };
        Ok(Environment {
            graph: Arc::new(graph),
            truth,
            features,
            load_report,
        })
    }
}

pub fn load_graph(cfg: &ExperimentConfig) -> Result<(DirectedGraph, Option<LoadReport>)> {
    let g = &cfg.graph;
    if let Some(path) = &g.path {
        let (graph, report) = load_edge_list_path(
            path,
            EdgeListOptions {
                symmetrize: g.symmetrize,
            },
        )?;
        return Ok((graph, Some(report)));
    }
    let graph = match g.generator {
        GeneratorKind::PowerLaw => power_law_digraph(g.nodes, g.edges, g.exponent, g.generator_seed)?,
        GeneratorKind::SmallWorld => small_world_digraph(g.nodes, g.neighbors, g.rewire, g.generator_seed)?,
    };
    Ok((graph, None))
}

/// What drives seed selection in a repetition.
pub enum Policy {
    /// `k` distinct uniformly random nodes each round.
    RandomSeeds,
    Learner(Box<dyn Learner>),
}

impl Policy {
    pub fn name(&self) -> String {
        match self {
            Policy::RandomSeeds => "random".into(),
            Policy::Learner(l) => l.name(),
        }
    }
}

fn build_learner(s: &StrategySection, env: &Environment) -> Result<Box<dyn Learner>> {
    let m = env.graph.edge_count();
    let features = || {
        env.features
            .clone()
            .ok_or_else(|| OimError::Config("edge features were not computed".into()))
    };
    let linear = || LinearModelState::new(env_dim(env), s.lambda, s.noise_r, s.delta);
    let prior = || BetaPrior::new(s.prior_alpha, s.prior_beta);
    Ok(match s.kind {
        StrategyKind::OracleTrue => Box::new(TruthOracle::new(&env.truth)),
        StrategyKind::ExploitMean => Box::new(ExploitMean::new(m, s.default_value)?),
        StrategyKind::ExploreRand => Box::new(ExploreRand::new(m, s.explore_lo, s.explore_hi)?),
        StrategyKind::RandPlusMean => Box::new(RandPlusMean::new(m, s.default_value, s.explore_lo, s.explore_hi)?),
        StrategyKind::Cucb => Box::new(Cucb::new(m, s.cucb_coeff)?),
        StrategyKind::EpsilonGreedy => Box::new(EpsilonGreedy::new(m, s.epsilon_c, s.default_value)?),
        StrategyKind::BetaTs => Box::new(BetaThompson::new(m, prior()?)),
        StrategyKind::Imlinucb => Box::new(ImLinUcb::new(linear()?, features()?, s.delta, s.gram_all_edges)?),
        StrategyKind::LinThompson | StrategyKind::LinThompsonUcb => Box::new(LinThompson::new(
            linear()?,
            features()?,
            prior()?,
            s.regression_target,
            s.kind == StrategyKind::LinThompsonUcb,
            s.delta,
            s.gram_all_edges,
        )?),
        StrategyKind::Ensemble | StrategyKind::EnsembleRandMean | StrategyKind::EnsembleRandLinthompson => {
            let members = s
                .member_sections()?
                .iter()
                .map(|ms| build_learner(ms, env))
                .collect::<Result<Vec<_>>>()?;
            Box::new(Ensemble::new(
                members,
                s.gamma,
                env.graph.node_count(),
                s.shared_updates,
            )?)
        }
        StrategyKind::Random => return Err(OimError::Config("random seeds are not a learner".into())),
    })
}

fn env_dim(env: &Environment) -> usize {
    env.features.as_ref().map_or(1, |f| f.dim())
}

pub fn build_policy(cfg: &ExperimentConfig, env: &Environment) -> Result<Policy> {
    match cfg.strategy.kind {
        StrategyKind::Random => Ok(Policy::RandomSeeds),
        _ => Ok(Policy::Learner(build_learner(&cfg.strategy, env)?)),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: usize,
    pub seeds: Vec<NodeId>,
    pub spread: usize,
    /// `eta * f_opt - spread`; negative when the realized cascade beats
    /// the expected optimum.
    pub regret: f64,
    pub member: Option<usize>,
    /// Member distribution after this round's update.
    pub member_probs: Option<Vec<f64>>,
    /// Number of edges observed this round.
    pub observed_edges: usize,
    pub elapsed_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub run_name: String,
    pub strategy: String,
    pub member_names: Vec<String>,
    pub node_count: usize,
    pub edge_count: usize,
    pub eta: f64,
    pub baseline: Baseline,
    pub mean_spread: Vec<f64>,
    pub mean_regret: Vec<f64>,
    pub cum_regret: Vec<f64>,
    /// Cumulative regret divided by the round index.
    pub avg_regret: Vec<f64>,
    /// Per-round member distribution averaged across repetitions.
    pub mean_member_probs: Vec<Vec<f64>>,
    pub repetitions: Vec<Vec<RoundRecord>>,
    pub runtime_ms: f64,
}

impl RunSummary {
    pub fn rounds(&self) -> usize {
        self.mean_regret.len()
    }

    pub fn total_regret(&self) -> f64 {
        self.cum_regret.last().copied().unwrap_or(0.0)
    }
}

/// Runs one repetition of the round loop.
pub fn run_repetition(
    cfg: &ExperimentConfig,
    env: &Environment,
    baseline: &Baseline,
    policy: &mut Policy,
    rep_seed: u64,
) -> Result<Vec<RoundRecord>> {
    let graph = env.graph.as_ref();
    let oracle = cfg.oracle_config();
    let mut strategy_rng = rng::stream(rep_seed, 0);
    let mut oracle_rng = rng::stream(rep_seed, 1);
    let mut world_rng = rng::stream(rep_seed, 2);
    let mut sim = CascadeSimulator::new(graph);
    let target = cfg.experiment.eta * baseline.f_opt;

    let mut records = Vec::with_capacity(cfg.experiment.rounds);
    for t in 1..=cfg.experiment.rounds {
        let start = Instant::now();
        let (seeds, member) = match policy {
            Policy::RandomSeeds => {
                if oracle.k > graph.node_count() {
                    return Err(OimError::invalid(format!(
                        "k = {} exceeds node count {}",
                        oracle.k,
                        graph.node_count()
                    )));
                }
                let mut s = index::sample(&mut oracle_rng, graph.node_count(), oracle.k).into_vec();
                s.sort_unstable();
                (s, None)
            }
            Policy::Learner(l) => {
                let est = l.estimate(t, &mut strategy_rng)?;
                let sel = select_seeds(graph, &est, &oracle, &mut oracle_rng)?;
                (sel.seeds, l.last_member())
            }
        };
        let outcome = sim.simulate(env.truth.probabilities(), &seeds, &mut world_rng)?;
        let member_probs = match policy {
            Policy::Learner(l) => {
                l.observe(t, &outcome, &mut strategy_rng)?;
                l.member_probabilities()
            }
            Policy::RandomSeeds => None,
        };
        let spread = outcome.spread();
        records.push(RoundRecord {
            round: t,
            seeds,
            spread,
            regret: target - spread as f64,
            member,
            member_probs,
            observed_edges: outcome.observed.len(),
            elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
        });
    }
    Ok(records)
}

pub fn repetition_seed(master: u64, rep: usize) -> u64 {
    derive_seed(master, &[REPETITION_LABEL, rep as u64])
}

pub fn baseline_rng(master: u64) -> StreamRng {
    rng::stream(derive_seed(master, &[BASELINE_LABEL]), 0)
}

/// Runs the full experiment described by `cfg`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunSummary> {
    cfg.validate()?;
    let env = Environment::from_config(cfg)?;
    run_experiment_in(cfg, &env)
}

/// Like [`run_experiment`] but reuses a prepared environment.
pub fn run_experiment_in(cfg: &ExperimentConfig, env: &Environment) -> Result<RunSummary> {
    let start = Instant::now();
    let seed = cfg.experiment.seed;
    let baseline = compute_optimal_baseline(
        &env.graph,
        &env.truth,
        &cfg.oracle_config(),
        cfg.experiment.baseline_samples,
        &mut baseline_rng(seed),
    )?;
    let policy_probe = build_policy(cfg, env)?;
    let strategy = policy_probe.name();
    let member_names = match &policy_probe {
        Policy::Learner(l) => l.member_names(),
        Policy::RandomSeeds => Vec::new(),
    };
    drop(policy_probe);

    let repetitions = (0..cfg.experiment.repetitions)
        .into_par_iter()
        .map(|r| {
            let mut policy = build_policy(cfg, env)?;
            run_repetition(cfg, env, &baseline, &mut policy, repetition_seed(seed, r))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut summary = summarize(cfg, env, baseline, repetitions, member_names)?;
    summary.strategy = strategy;
    summary.runtime_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(summary)
}

fn summarize(
    cfg: &ExperimentConfig,
    env: &Environment,
    baseline: Baseline,
    repetitions: Vec<Vec<RoundRecord>>,
    member_names: Vec<String>,
) -> Result<RunSummary> {
    let rounds = cfg.experiment.rounds;
    let reps = repetitions.len() as f64;
    let mut mean_spread = vec![0.0; rounds];
    let mut mean_regret = vec![0.0; rounds];
    let mut mean_member_probs = vec![vec![0.0; member_names.len()]; if member_names.is_empty() { 0 } else { rounds }];
    for rep in &repetitions {
        for (i, rec) in rep.iter().enumerate() {
            mean_spread[i] += rec.spread as f64 / reps;
            mean_regret[i] += rec.regret / reps;
            if let (Some(row), Some(p)) = (mean_member_probs.get_mut(i), &rec.member_probs) {
                if p.len() != row.len() {
                    return Err(OimError::Dimension {
                        expected: row.len(),
                        actual: p.len(),
                    });
                }
                for (acc, v) in row.iter_mut().zip(p) {
                    *acc += v / reps;
                }
            }
        }
    }
    let mut cum_regret = Vec::with_capacity(rounds);
    let mut acc = 0.0;
    for r in &mean_regret {
        acc += r;
        cum_regret.push(acc);
    }
    let avg_regret = cum_regret.iter().enumerate().map(|(i, c)| c / (i + 1) as f64).collect();
    Ok(RunSummary {
        run_name: cfg.experiment.run_name.clone(),
        strategy: String::new(),
        member_names,
        node_count: env.graph.node_count(),
        edge_count: env.graph.edge_count(),
        eta: cfg.experiment.eta,
        baseline,
        mean_spread,
        mean_regret,
        cum_regret,
        avg_regret,
        mean_member_probs,
        repetitions,
        runtime_ms: 0.0,
    })
}
