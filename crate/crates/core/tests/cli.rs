use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn oim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_oim")).args(args).output().unwrap()
}

fn quick_config() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/quick.toml")
}

fn run_quick(dir: &Path, extra: &[&str]) -> String {
    let out_dir = format!("out_dir={}", dir.display());
    let config = quick_config();
    let mut args = vec!["run", config.to_str().unwrap(), out_dir.as_str(), "rounds=100"];
    args.extend_from_slice(extra);
    let out = oim(&args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn run_writes_one_row_per_round() {
    let dir = tempfile::tempdir().unwrap();
    let stdout = run_quick(dir.path(), &["strategy.kind=exploit_mean"]);
    assert!(stdout.contains("100 rounds"));
    let csv = std::fs::read_to_string(dir.path().join("quick.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 101);
    assert_eq!(lines[0], "round,mean_spread,mean_regret,cum_regret,avg_regret");
    assert!(lines[100].starts_with("100,"));
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("quick.json")).unwrap()).unwrap();
    assert_eq!(meta["config_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn reruns_are_byte_identical_across_thread_counts() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run_quick(a.path(), &["strategy.kind=ensemble_rand_mean"]);
    let out_dir = format!("out_dir={}", b.path().display());
    let out = oim(&[
        "--threads",
        "2",
        "run",
        quick_config().to_str().unwrap(),
        &out_dir,
        "rounds=100",
        "strategy.kind=ensemble_rand_mean",
    ]);
    assert!(out.status.success());
    let read = |d: &Path| std::fs::read(d.join("quick.csv")).unwrap();
    assert_eq!(read(a.path()), read(b.path()));
    let header = String::from_utf8(read(a.path())).unwrap();
    assert!(header
        .lines()
        .next()
        .unwrap()
        .ends_with("psi_exploit_mean,psi_explore_rand"));
}

#[test]
fn plot_data_merges_runs_by_round() {
    let dir = tempfile::tempdir().unwrap();
    run_quick(dir.path(), &["run_name=a", "rounds=10"]);
    run_quick(dir.path(), &["run_name=b", "rounds=10", "strategy.kind=random"]);
    let merged = dir.path().join("merged.csv");
    let out = oim(&[
        "plot-data",
        dir.path().join("a.csv").to_str().unwrap(),
        dir.path().join("b.csv").to_str().unwrap(),
        "-o",
        merged.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(merged).unwrap();
    let header = text.lines().next().unwrap();
    assert!(header.starts_with("round,"));
    assert!(header.contains("a:cum_regret") && header.contains("b:cum_regret"));
    assert_eq!(text.lines().count(), 11);
}

#[test]
fn graph_info_and_baseline_print_json() {
    let dir = tempfile::tempdir().unwrap();
    let edges = dir.path().join("g.txt");
    std::fs::write(&edges, "# toy\n0 1\n1 2\n1 2\n2 2\n").unwrap();
    let out = oim(&["graph-info", "--edges", edges.to_str().unwrap()]);
    assert!(out.status.success());
    let info: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(info["nodes"], 3);
    assert_eq!(info["edges"], 2);
    assert_eq!(info["load_report"]["duplicates"], 1);

    let out = oim(&["baseline", quick_config().to_str().unwrap(), "k=2"]);
    assert!(out.status.success());
    let baseline: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(baseline["seeds"].as_array().unwrap().len(), 2);
    assert!(baseline["f_opt"].as_f64().unwrap() >= 2.0);
}

#[test]
fn bad_input_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "[experiment]\nrounds = \"many\"\n").unwrap();
    let out = oim(&["run", bad.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));

    let out = oim(&["run", quick_config().to_str().unwrap(), "no_such_key=1"]);
    assert!(!out.status.success());
    let out = oim(&[
        "graph-info",
        "--edges",
        dir.path().join("missing.txt").to_str().unwrap(),
    ]);
    assert!(!out.status.success());
}
