//! Command-line front end for online influence-maximization experiments.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use oim_core::graph::{load_edge_list_path, EdgeListOptions};
use oim_core::harness::{self, ExperimentConfig, RunTable};
use oim_core::{OimError, Result};

#[derive(Parser)]
#[command(name = "oim", version, about = "Online influence maximization experiments")]
struct Cli {
    /// Worker threads (defaults to all cores). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write `<run_name>.csv` / `.json` to `out_dir`.
    Run {
        config: PathBuf,
        /// `key=value` overrides, e.g. `rounds=50` or `strategy.kind=cucb`.
        overrides: Vec<String>,
    },
    /// Print the oracle seeds on the true probabilities and their spread.
    Baseline { config: PathBuf, overrides: Vec<String> },
    /// Merge several result CSVs into one table aligned by round.
    PlotData {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        /// Output file; stdout when omitted.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Summarize a graph from an edge list or from a config's graph section.
    GraphInfo {
        #[arg(long, conflicts_with = "config", required_unless_present = "config")]
        edges: Option<PathBuf>,
        #[arg(long)]
        symmetrize: bool,
        #[arg(long)]
        config: Option<PathBuf>,
        overrides: Vec<String>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    }
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn to_json<T: serde::Serialize>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value).map_err(|e| OimError::Config(e.to_string()))
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Run { config, overrides } => {
            let cfg = ExperimentConfig::load(&config, &overrides)?;
            let summary = harness::run_experiment(&cfg)?;
            let files = harness::emit_results(&summary, &cfg, &cfg.experiment.out_dir)?;
            println!(
                "{}: {} rounds x {} repetitions, f_opt {:.3}, cumulative regret {:.3}, {:.0} ms",
                summary.strategy,
                summary.rounds(),
                summary.repetitions.len(),
                summary.baseline.f_opt,
                summary.total_regret(),
                summary.runtime_ms
            );
            println!("wrote {} and {}", files.csv.display(), files.json.display());
        }
        Command::Baseline { config, overrides } => {
            let cfg = ExperimentConfig::load(&config, &overrides)?;
            let env = harness::Environment::from_config(&cfg)?;
            let baseline = harness::compute_optimal_baseline(
                &env.graph,
                &env.truth,
                &cfg.oracle_config(),
                cfg.experiment.baseline_samples,
                &mut harness::runner::baseline_rng(cfg.experiment.seed),
            )?;
            println!("{}", to_json(&baseline)?);
        }
        Command::PlotData { inputs, output } => {
            let tables = inputs.iter().map(|p| RunTable::read(p)).collect::<Result<Vec<_>>>()?;
            match output {
                Some(path) => {
                    let file = std::fs::File::create(&path).map_err(|e| OimError::io(&path, e))?;
                    harness::merge_runs(&tables, std::io::BufWriter::new(file))?;
                }
                None => harness::merge_runs(&tables, std::io::stdout().lock())?,
            }
        }
        Command::GraphInfo {
            edges,
            symmetrize,
            config,
            overrides,
        } => {
            let (graph, report) = match (edges, config) {
                (Some(path), _) => {
                    let (g, r) = load_edge_list_path(&path, EdgeListOptions { symmetrize })?;
                    (g, Some(r))
                }
                (None, Some(path)) => harness::load_graph(&ExperimentConfig::load(&path, &overrides)?)?,
                (None, None) => return Err(OimError::invalid("give --edges or --config")),
            };
            let n = graph.node_count();
            let info = serde_json::json!({
                "nodes": n,
                "edges": graph.edge_count(),
                "max_out_degree": (0..n).map(|u| graph.out_degree(u)).max().unwrap_or(0),
                "max_in_degree": (0..n).map(|u| graph.in_degree(u)).max().unwrap_or(0),
                "isolated_nodes": (0..n).filter(|&u| graph.out_degree(u) + graph.in_degree(u) == 0).count(),
                "load_report": report,
            });
            println!("{}", to_json(&info)?);
        }
    }
    Ok(())
}
