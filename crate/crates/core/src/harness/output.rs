//! Result files: a per-round CSV and a JSON sidecar, plus merging of several
//! runs into one table for plotting.

use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use super::config::ExperimentConfig;
use super::runner::{Baseline, RunSummary};
use crate::error::{OimError, Result};

/// Columns carried over by [`merge_runs`] for every input file.
pub const PLOT_COLUMNS: [&str; 4] = ["mean_spread", "mean_regret", "cum_regret", "avg_regret"];

/// SHA-256 over `"blob <len>\0" + bytes`, the object-id layout git uses.
pub fn content_hash(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", bytes.len()).as_bytes());
    h.update(bytes);
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

fn csv_error(path: &Path, e: csv::Error) -> OimError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => OimError::io(path, io),
        other => OimError::Config(format!("{}: {other:?}", path.display())),
    }
}

/// Writes the per-round table. Member columns are named `psi_<name>`.
pub fn write_csv<W: Write>(summary: &RunSummary, out: W) -> std::result::Result<(), csv::Error> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    let mut header: Vec<String> = ["round", "mean_spread", "mean_regret", "cum_regret", "avg_regret"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let mut seen = std::collections::HashMap::new();
    for name in &summary.member_names {
        let count = seen.entry(name.clone()).or_insert(0);
        *count += 1;
        header.push(if *count == 1 {
            format!("psi_{name}")
        } else {
            format!("psi_{name}_{count}")
        });
    }
    w.write_record(&header)?;
    for i in 0..summary.rounds() {
        let mut row = vec![
            (i + 1).to_string(),
            summary.mean_spread[i].to_string(),
            summary.mean_regret[i].to_string(),
            summary.cum_regret[i].to_string(),
            summary.avg_regret[i].to_string(),
        ];
        if let Some(p) = summary.mean_member_probs.get(i) {
            row.extend(p.iter().map(|v| v.to_string()));
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct Sidecar<'a> {
    run_name: &'a str,
    strategy: &'a str,
    member_names: &'a [String],
    node_count: usize,
    edge_count: usize,
    rounds: usize,
    repetitions: usize,
    eta: f64,
    baseline: &'a Baseline,
    total_regret: f64,
    config_hash: String,
    graph_hash: Option<String>,
    runtime_ms: f64,
    config: &'a ExperimentConfig,
}

/// Paths written by [`emit_results`].
#[derive(Debug, Clone, PartialEq)]
pub struct EmittedFiles {
    pub csv: PathBuf,
    pub json: PathBuf,
}

/// Writes `<run_name>.csv` and `<run_name>.json` into `dir`.
pub fn emit_results(summary: &RunSummary, cfg: &ExperimentConfig, dir: &Path) -> Result<EmittedFiles> {
    std::fs::create_dir_all(dir).map_err(|e| OimError::io(dir, e))?;
    let csv_path = dir.join(format!("{}.csv", summary.run_name));
    let json_path = dir.join(format!("{}.json", summary.run_name));

    let file = std::fs::File::create(&csv_path).map_err(|e| OimError::io(&csv_path, e))?;
    write_csv(summary, std::io::BufWriter::new(file)).map_err(|e| csv_error(&csv_path, e))?;

    let graph_hash = match &cfg.graph.path {
        Some(p) => {
            let mut bytes = Vec::new();
            std::fs::File::open(p)
                .and_then(|mut f| f.read_to_end(&mut bytes))
                .map_err(|e| OimError::io(p, e))?;
            Some(content_hash(&bytes))
        }
        None => None,
    };
    let sidecar = Sidecar {
        run_name: &summary.run_name,
        strategy: &summary.strategy,
        member_names: &summary.member_names,
        node_count: summary.node_count,
        edge_count: summary.edge_count,
        rounds: summary.rounds(),
        repetitions: summary.repetitions.len(),
        eta: summary.eta,
        baseline: &summary.baseline,
        total_regret: summary.total_regret(),
        config_hash: content_hash(cfg.to_toml_string()?.as_bytes()),
        graph_hash,
        runtime_ms: summary.runtime_ms,
        config: cfg,
    };
    let text = serde_json::to_string_pretty(&sidecar).map_err(|e| OimError::Config(e.to_string()))?;
    std::fs::write(&json_path, text + "\n").map_err(|e| OimError::io(&json_path, e))?;
    Ok(EmittedFiles {
        csv: csv_path,
        json: json_path,
    })
}

/// A run's CSV as named columns.
#[derive(Debug, Clone, PartialEq)]
pub struct RunTable {
    pub label: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl RunTable {
    pub fn read(path: &Path) -> Result<Self> {
        let mut r = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
        let header = r
            .headers()
            .map_err(|e| csv_error(path, e))?
            .iter()
            .map(str::to_owned)
            .collect();
        let rows = r
            .records()
            .map(|rec| rec.map(|r| r.iter().map(str::to_owned).collect()))
            .collect::<std::result::Result<Vec<Vec<String>>, _>>()
            .map_err(|e| csv_error(path, e))?;
        let label = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        Ok(RunTable { label, header, rows })
    }

    fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }
}

/// Joins runs by round index into one table with `<label>:<column>`
/// headers. Shorter runs leave trailing cells empty.
pub fn merge_runs<W: Write>(tables: &[RunTable], out: W) -> Result<()> {
    if tables.is_empty() {
        return Err(OimError::invalid("plot-data needs at least one run"));
    }
    let mut header = vec!["round".to_string()];
    let mut picks = Vec::new();
    for (t, table) in tables.iter().enumerate() {
        for col in PLOT_COLUMNS {
            let idx = table
                .column(col)
                .ok_or_else(|| OimError::Config(format!("run '{}' has no column '{col}'", table.label)))?;
            header.push(format!("{}:{col}", table.label));
            picks.push((t, idx));
        }
    }
    let rounds = tables.iter().map(|t| t.rows.len()).max().unwrap_or(0);
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    let io_err = |e: csv::Error| OimError::Config(e.to_string());
    w.write_record(&header).map_err(io_err)?;
    for i in 0..rounds {
        let mut row = vec![(i + 1).to_string()];
        for &(t, idx) in &picks {
            row.push(
                tables[t]
                    .rows
                    .get(i)
                    .and_then(|r| r.get(idx))
                    .cloned()
                    .unwrap_or_default(),
            );
        }
        w.write_record(&row).map_err(io_err)?;
    }
    w.flush().map_err(|e| OimError::Config(e.to_string()))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_matches_git_blob_layout() {
        // `printf 'hello\n' | git hash-object --stdin` with SHA-256 object format
        assert_eq!(
            content_hash(b"hello\n"),
            "2cf8d83d9ee29543b34a87727421fdecb7e3f3a183d337639025de576db9ebb4"
        );
    }

    #[test]
    fn merge_aligns_by_round() {
        let mk = |label: &str, n: usize| RunTable {
            label: label.into(),
            header: ["round", "mean_spread", "mean_regret", "cum_regret", "avg_regret"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
            rows: (1..=n)
                .map(|i| vec![i.to_string(), "1".into(), "2".into(), "3".into(), "4".into()])
                .collect(),
        };
        let mut out = Vec::new();
        merge_runs(&[mk("a", 2), mk("b", 3)], &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 4);
        assert!(lines[0].starts_with("round,a:mean_spread"));
        assert_eq!(lines[3], "3,,,,,1,2,3,4");
    }
}
