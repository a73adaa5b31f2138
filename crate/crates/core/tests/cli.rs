//! End-to-end tests of the `bgw` binary: exit codes, output values, and
//! reproducibility of stochastic commands.

use std::path::Path;
use std::process::{Command, Output};

fn bgw(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bgw"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_model(dir: &Path, name: &str, json: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, json).unwrap();
    path.to_string_lossy().into_owned()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn q_exact_reports_survival_and_regime() {
    let dir = tempfile::tempdir().unwrap();
    let model = write_model(
        dir.path(),
        "m.json",
        r#"{ "pmf": [0.5, 0.0, 0.5], "marking": { "kind": "constant", "value": 0.02 } }"#,
    );
    let out = bgw(&["q-exact", &model]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("Q       = 0.1826505"), "{text}");
    assert!(text.contains("regime  = balanced"), "{text}");
    assert!(text.contains("c       = 0.000000"), "{text}");
    assert!(text.contains("lambda  = 0.5000000"), "{text}");
}

#[test]
fn q_exact_degenerate_regime_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let model = write_model(
        dir.path(),
        "m.json",
        r#"{ "pmf": [0.5, 0.0, 0.5], "marking": { "kind": "none" } }"#,
    );
    let out = bgw(&["q-exact", &model]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("degenerate regime"));
}

#[test]
fn q_exact_malformed_pmf_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let model = write_model(
        dir.path(),
        "m.json",
        r#"{ "pmf": [0.5, 0.6], "marking": { "kind": "none" } }"#,
    );
    let out = bgw(&["q-exact", &model]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("1.1"));
}

#[test]
fn escape_law_reference_rows() {
    // c = 0: psi(0) = sqrt(2)/2, tail(0) = 1
    let out = bgw(&["escape-law", "--c", "0", "--sigma2", "1", "--t-max", "2", "--steps", "2"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "t_sqrt_mu,psi,tail");
    let first: Vec<f64> = lines
        .next()
        .unwrap()
        .split(',')
        .map(|v| v.parse().unwrap())
        .collect();
    assert_eq!(first[0], 0.0);
    assert!((first[1] - 2f64.sqrt() / 2.0).abs() < 1e-6);
    assert_eq!(first[2], 1.0);
}

#[test]
fn escape_law_rejects_bad_sigma() {
    let out = bgw(&["escape-law", "--c", "0", "--sigma2", "-1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn simulate_y_is_reproducible_and_needs_seed() {
    let missing = bgw(&["simulate-y", "--lambda", "0.5"]);
    assert_eq!(missing.status.code(), Some(2)); // clap usage error

    let a = bgw(&["simulate-y", "--lambda", "0.5", "--seed", "11"]);
    let b = bgw(&["simulate-y", "--lambda", "0.5", "--seed", "11"]);
    assert!(a.status.success());
    assert_eq!(stdout(&a), stdout(&b));
    let c = bgw(&["simulate-y", "--lambda", "0.5", "--seed", "12"]);
    assert_ne!(stdout(&a), stdout(&c));

    // lambda = 0: exactly one death event after the initial state
    let d = bgw(&["simulate-y", "--lambda", "0", "--seed", "1"]);
    let rows: Vec<String> = stdout(&d).lines().map(String::from).collect();
    assert_eq!(rows.len(), 3);
    assert!(rows[2].ends_with(",0"));
}

#[test]
fn mutation_derive_poisson_closed_forms() {
    let dir = tempfile::tempdir().unwrap();
    // Poisson(1) pmf truncated at k = 20, renormalized
    let mut pmf = Vec::new();
    let mut term = (-1.0f64).exp();
    for k in 0..=20 {
        pmf.push(term);
        term /= (k + 1) as f64;
    }
    let total: f64 = pmf.iter().sum();
    let pmf: Vec<String> = pmf.iter().map(|p| format!("{}", p / total)).collect();
    let model = write_model(
        dir.path(),
        "q.json",
        &format!(
            r#"{{ "pmf": [{}], "marking": {{ "kind": "none" }} }}"#,
            pmf.join(", ")
        ),
    );
    let out = bgw(&["mutation-derive", &model, "--pi", "0.01"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("mu      = 0.009950166"), "{text}");
    assert!(text.contains("M       = 0.9900000"), "{text}");
}

#[test]
fn run_requires_seed_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let exp = write_model(
        dir.path(),
        "exp.json",
        r#"{
            "id": "cli-surv",
            "target": "survival_probability",
            "model": { "inline": { "pmf": [0.5, 0.0, 0.5], "marking": { "kind": "constant", "value": 0.02 } } },
            "replicas": 5000
        }"#,
    );
    let out_dir = dir.path().join("results");
    let missing = bgw(&["run", "--experiment", &exp, "--out", out_dir.to_str().unwrap()]);
    assert_eq!(missing.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("--seed"));

    let run = |seed: &str| {
        let out = bgw(&[
            "run",
            "--experiment",
            &exp,
            "--seed",
            seed,
            "--out",
            out_dir.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        stdout(&out)
    };
    let a = run("123");
    let b = run("123");
    assert_eq!(a, b);
    let c = run("124");
    assert_ne!(a, c);
    // config echo lands in the persisted record
    let record_dir = out_dir.join("cli-surv");
    let mut json_files: Vec<_> = std::fs::read_dir(&record_dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "json"))
        .collect();
    json_files.sort();
    let text = std::fs::read_to_string(json_files.last().unwrap()).unwrap();
    let record: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(record["config"]["replicas"], 5000);
    assert_eq!(record["config"]["seed"], 124);
    assert_eq!(record["version"], env!("CARGO_PKG_VERSION"));
}

#[test]
fn sweep_preset_emits_ratio_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = bgw(&[
        "sweep",
        "--preset",
        "critical-marking",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("0.9132525"), "{text}");
    assert!(text.contains("0.9535168"), "{text}");
    assert!(text.contains("0.9759073"), "{text}");
    assert!(text.contains("monotone approach to 1: true"), "{text}");
    // CSV persisted
    let csv_dir = dir.path().join("critical-marking");
    let csv: Vec<_> = std::fs::read_dir(&csv_dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .collect();
    assert_eq!(csv.len(), 1);
    let body = std::fs::read_to_string(&csv[0]).unwrap();
    assert!(body.starts_with("parameter,exact,asymptotic,ratio\n"));
    assert_eq!(body.lines().count(), 4);
}

#[test]
fn sweep_unknown_preset_exits_2() {
    let out = bgw(&["sweep", "--preset", "no-such"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn run_budget_exceeded_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    // subcritical and unmarked at the horizon: acceptance is (nearly)
    // impossible, so a tiny attempt budget trips quickly
    let exp = write_model(
        dir.path(),
        "exp.json",
        r#"{
            "id": "cli-budget",
            "target": "leaf_count",
            "model": { "inline": { "pmf": [0.6, 0.0, 0.4], "marking": { "kind": "constant", "value": 1e-9 } } },
            "replicas": 1000,
            "seed": 3,
            "horizon": 50,
            "attempt_budget": 20000
        }"#,
    );
    let out = bgw(&["run", "--experiment", &exp, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stderr).contains("budget"));
}

#[test]
fn run_sequential_experiment() {
    let dir = tempfile::tempdir().unwrap();
    let exp = write_model(
        dir.path(),
        "exp.json",
        r#"{
            "id": "cli-seq",
            "target": "sequential_q",
            "model": { "sequential": { "levels": [
                { "pmf": [0.5, 0.0, 0.5], "mutation_prob": 0.05 },
                { "pmf": [0.5, 0.0, 0.5], "mutation_prob": 0.05 }
            ] } },
            "replicas": 20000,
            "seed": 5
        }"#,
    );
    let out = bgw(&[
        "run",
        "--experiment",
        &exp,
        "--out",
        dir.path().join("results").to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert!(text.contains("wild_skeleton_survival"), "{text}");
}
