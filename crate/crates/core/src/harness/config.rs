//! Experiment configuration: a sectioned TOML file plus `key=value` overrides.
//!
//! ```toml
//! [graph]
//! generator = "power_law"
//! nodes = 350
//! edges = 5000
//!
//! [experiment]
//! k = 10
//! rounds = 100
//!
//! [strategy]
//! kind = "ensemble"
//! members = ["exploit_mean", { kind = "explore_rand", explore_hi = 1.0 }]
//! ```
//!
//! Every key is unique across sections, so an override may name it bare
//! (`rounds=50`) or qualified (`experiment.rounds=50`).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::ensemble::DEFAULT_GAMMA;
use crate::error::{OimError, Result};
use crate::oracle::{OracleConfig, OracleMethod};
use crate::strategies::RegressionTarget;

pub const SECTIONS: [&str; 4] = ["graph", "experiment", "oracle", "strategy"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorKind {
    PowerLaw,
    SmallWorld,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GraphSection {
    /// Edge-list file; takes precedence over the generator.
    pub path: Option<PathBuf>,
    /// Load each line as two directed edges.
    pub symmetrize: bool,
    pub generator: GeneratorKind,
    pub nodes: usize,
    pub edges: usize,
    pub exponent: f64,
    pub neighbors: usize,
    pub rewire: f64,
    pub generator_seed: u64,
    pub feature_dim: usize,
}

impl Default for GraphSection {
    fn default() -> Self {
        GraphSection {
            path: None,
            symmetrize: false,
            generator: GeneratorKind::PowerLaw,
            nodes: 350,
            edges: 5000,
            exponent: 2.5,
            neighbors: 4,
            rewire: 0.1,
            generator_seed: 7,
            feature_dim: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSection {
    pub run_name: String,
    pub k: usize,
    pub rounds: usize,
    pub repetitions: usize,
    /// Scale applied to the optimal spread in the regret.
    pub eta: f64,
    pub seed: u64,
    /// Diffusions used to estimate the optimal spread.
    pub baseline_samples: usize,
    pub out_dir: PathBuf,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        ExperimentSection {
            run_name: "run".into(),
            k: 10,
            rounds: 100,
            repetitions: 3,
            eta: 1.0,
            seed: 2024,
            baseline_samples: 10_000,
            out_dir: PathBuf::from("results"),
        }
    }
}

/// Oracle keys as they appear in the file; the seed budget lives in
/// `[experiment]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleSection {
    pub method: OracleMethod,
    pub mc_samples: usize,
    pub epsilon: f64,
    pub ell: f64,
    pub rr_set_floor: usize,
    pub rr_set_cap: usize,
}

impl Default for OracleSection {
    fn default() -> Self {
        let d = OracleConfig::default();
        OracleSection {
            method: d.method,
            mc_samples: d.mc_samples,
            epsilon: d.epsilon,
            ell: d.ell,
            rr_set_floor: d.rr_set_floor,
            rr_set_cap: d.rr_set_cap,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyKind {
    /// Uniformly random seed sets, no oracle.
    Random,
    /// Oracle on the true probabilities.
    OracleTrue,
    ExploitMean,
    ExploreRand,
    RandPlusMean,
    Cucb,
    EpsilonGreedy,
    BetaTs,
    Imlinucb,
    LinThompson,
    LinThompsonUcb,
    Ensemble,
    /// Ensemble of exploit_mean and explore_rand.
    EnsembleRandMean,
    /// Ensemble of lin_thompson_ucb and explore_rand.
    EnsembleRandLinthompson,
}

impl StrategyKind {
    pub fn uses_features(self) -> bool {
        matches!(
            self,
            StrategyKind::Imlinucb
                | StrategyKind::LinThompson
                | StrategyKind::LinThompsonUcb
                | StrategyKind::EnsembleRandLinthompson
        )
    }

    pub fn is_ensemble(self) -> bool {
        matches!(
            self,
            StrategyKind::Ensemble | StrategyKind::EnsembleRandMean | StrategyKind::EnsembleRandLinthompson
        )
    }

    /// Member list of the named ensembles.
    pub fn preset_members(self) -> Option<[StrategyKind; 2]> {
        match self {
            StrategyKind::EnsembleRandMean => Some([StrategyKind::ExploitMean, StrategyKind::ExploreRand]),
            StrategyKind::EnsembleRandLinthompson => Some([StrategyKind::LinThompsonUcb, StrategyKind::ExploreRand]),
            _ => None,
        }
    }

    pub fn label(self) -> String {
        serde_json::to_value(self)
            .ok()
            .and_then(|v| v.as_str().map(str::to_owned))
            .unwrap_or_default()
    }
}

/// An ensemble member: a bare kind, or a table of strategy keys that
/// override the enclosing section's values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MemberSpec {
    Kind(StrategyKind),
    Table(toml::Table),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StrategySection {
    pub kind: StrategyKind,
    pub members: Vec<MemberSpec>,
    pub gamma: f64,
    /// Feed every member's statistics each round, not only the chosen one.
    pub shared_updates: bool,
    /// Empirical-mean value of never-observed edges.
    pub default_value: f64,
    pub cucb_coeff: f64,
    pub epsilon_c: f64,
    pub prior_alpha: f64,
    pub prior_beta: f64,
    pub lambda: f64,
    pub delta: f64,
    pub noise_r: f64,
    pub regression_target: RegressionTarget,
    pub gram_all_edges: bool,
    pub explore_lo: f64,
    pub explore_hi: f64,
}

impl Default for StrategySection {
    fn default() -> Self {
        StrategySection {
            kind: StrategyKind::EnsembleRandMean,
            members: Vec::new(),
            gamma: DEFAULT_GAMMA,
            shared_updates: true,
            default_value: 0.5,
            cucb_coeff: 1.0,
            epsilon_c: 0.1,
            prior_alpha: 1.0,
            prior_beta: 1.0,
            lambda: 1.0,
            delta: 0.05,
            noise_r: 0.5,
            regression_target: RegressionTarget::Sampled,
            gram_all_edges: false,
            explore_lo: 0.0,
            explore_hi: 0.01,
        }
    }
}

impl StrategySection {
    /// Concrete member sections of an ensemble, in order.
    pub fn member_sections(&self) -> Result<Vec<StrategySection>> {
        if let Some(preset) = self.kind.preset_members() {
            if !self.members.is_empty() {
                return Err(OimError::Config(format!(
                    "strategy '{}' has fixed members; use kind = \"ensemble\" for a custom list",
                    self.kind.label()
                )));
            }
            return Ok(preset
                .iter()
                .map(|&kind| StrategySection {
                    kind,
                    members: Vec::new(),
                    ..self.clone()
                })
                .collect());
        }
        let mut base = toml::Table::try_from(self).map_err(|e| OimError::Config(e.to_string()))?;
        base.remove("members");
        self.members
            .iter()
            .map(|m| {
                let mut table = base.clone();
                match m {
                    MemberSpec::Kind(kind) => {
                        table.insert("kind".into(), toml::Value::String(kind.label()));
                    }
                    MemberSpec::Table(t) => {
                        if t.contains_key("members") {
                            return Err(OimError::Config("ensemble members cannot be nested".into()));
                        }
                        if !t.contains_key("kind") {
                            return Err(OimError::Config("ensemble member table needs a 'kind'".into()));
                        }
                        table.extend(t.clone());
                    }
                }
                let section: StrategySection = table
                    .try_into()
                    .map_err(|e: toml::de::Error| OimError::Config(e.to_string()))?;
                if section.kind.is_ensemble() {
                    return Err(OimError::Config("ensemble members cannot be nested".into()));
                }
                if matches!(section.kind, StrategyKind::Random) {
                    return Err(OimError::Config(
                        "the random-seed baseline cannot be an ensemble member".into(),
                    ));
                }
                Ok(section)
            })
            .collect()
    }

    /// Whether this strategy or any member needs edge features.
    pub fn needs_features(&self) -> Result<bool> {
        if self.kind.is_ensemble() {
            Ok(self.member_sections()?.iter().any(|m| m.kind.uses_features()))
        } else {
            Ok(self.kind.uses_features())
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub graph: GraphSection,
    pub experiment: ExperimentSection,
    pub oracle: OracleSection,
    pub strategy: StrategySection,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        Self::with_overrides(text, &[])
    }

    /// Parses `text` after applying `key=value` overrides. Values are read as
    /// TOML literals when possible and as plain strings otherwise.
    pub fn with_overrides(text: &str, overrides: &[String]) -> Result<Self> {
        let mut root: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| OimError::Config(e.to_string()))?;
        for item in overrides {
            apply_override(&mut root, item)?;
        }
        let cfg: ExperimentConfig = root
            .try_into()
            .map_err(|e: toml::de::Error| OimError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| OimError::io(path, e))?;
        let mut cfg = Self::with_overrides(&text, overrides)?;
        if let Some(p) = &cfg.graph.path {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    cfg.graph.path = Some(dir.join(p));
                }
            }
        }
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| OimError::Config(e.to_string()))
    }

    pub fn oracle_config(&self) -> OracleConfig {
        let o = &self.oracle;
        OracleConfig {
            k: self.experiment.k,
            method: o.method,
            mc_samples: o.mc_samples,
            epsilon: o.epsilon,
            ell: o.ell,
            rr_set_floor: o.rr_set_floor,
            rr_set_cap: o.rr_set_cap,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let e = &self.experiment;
        if e.k == 0 || e.rounds == 0 || e.repetitions == 0 {
            return Err(OimError::Config(
                "k, rounds and repetitions must all be at least 1".into(),
            ));
        }
        if !(e.eta > 0.0 && e.eta <= 1.0) {
            return Err(OimError::Config(format!("eta {} outside (0, 1]", e.eta)));
        }
        if e.baseline_samples == 0 {
            return Err(OimError::Config("baseline_samples must be at least 1".into()));
        }
        if self.graph.feature_dim == 0 || self.graph.feature_dim > 64 {
            return Err(OimError::Config(format!(
                "feature_dim {} outside [1, 64]",
                self.graph.feature_dim
            )));
        }
        self.oracle_config().validate()?;
        let s = &self.strategy;
        if s.kind.is_ensemble() {
            let members = s.member_sections()?;
            if members.is_empty() {
                return Err(OimError::Config("ensemble needs at least one member".into()));
            }
        } else if !s.members.is_empty() {
            return Err(OimError::Config(format!(
                "'members' only applies to ensembles, not '{}'",
                s.kind.label()
            )));
        }
        Ok(())
    }
}

fn apply_override(root: &mut toml::Table, item: &str) -> Result<()> {
    let (key, raw) = item
        .split_once('=')
        .ok_or_else(|| OimError::Config(format!("override '{item}' is not key=value")))?;
    let key = key.trim().trim_start_matches("--");
    let (section, field) = match key.split_once('.') {
        Some((s, f)) => (s.to_owned(), f.to_owned()),
        None => (section_of(key)?.to_owned(), key.to_owned()),
    };
    if !SECTIONS.contains(&section.as_str()) {
        return Err(OimError::Config(format!("unknown section '{section}'")));
    }
    let value = parse_value(raw.trim());
    let entry = root
        .entry(section.clone())
        .or_insert_with(|| toml::Value::Table(toml::Table::new()));
    match entry {
        toml::Value::Table(t) => {
            t.insert(field, value);
            Ok(())
        }
        _ => Err(OimError::Config(format!("'{section}' is not a section"))),
    }
}

fn section_of(key: &str) -> Result<&'static str> {
    let defaults = toml::Table::try_from(ExperimentConfig::default()).map_err(|e| OimError::Config(e.to_string()))?;
    let optional: &[(&str, &str)] = &[("path", "graph"), ("members", "strategy")];
    if let Some((_, s)) = optional.iter().find(|(k, _)| *k == key) {
        return Ok(s);
    }
    SECTIONS
        .iter()
        .find(|s| {
            defaults
                .get(**s)
                .and_then(|v| v.as_table())
                .is_some_and(|t| t.contains_key(key))
        })
        .copied()
        .ok_or_else(|| OimError::Config(format!("unknown configuration key '{key}'")))
}

fn parse_value(raw: &str) -> toml::Value {
    let doc = format!("v = {raw}");
    match doc.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(raw.into())),
        Err(_) => toml::Value::String(raw.into()),
    }
}
