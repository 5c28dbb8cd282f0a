//! End-to-end exercises of the command line contract: exit codes, report
//! shapes and byte-level determinism.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const GOOD: &str = r#"
[fields]
p = "2"
q = "2.5"
s = "0.5"
a = "1"
b = "1"
p_star = "1.5"
q_star = "1.8"
s_star = "0"

[domain]
dimension = 1
n = 3
resolution = 32

[hypotheses]
grid_resolution = 512
"#;

const H1_VIOLATING: &str = r#"
[fields]
p = "2"
q = "3.2"
s = "0"
a = "1"
b = "1"

[domain]
dimension = 1
n = 2

[hypotheses]
grid_resolution = 256
"#;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_logphase"))
        .args(args)
        .env("MUSIELAK_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn validate_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let good = write_config(dir.path(), "good.toml", GOOD);
    let out = run(&["validate", "--config", &good]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));

    let bad = write_config(dir.path(), "bad.toml", H1_VIOLATING);
    let out = run(&["validate", "--config", &bad]);
    assert_eq!(out.status.code(), Some(1));
    let body: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let entries = body["report"]["entries"].as_array().unwrap();
    let h1 = entries
        .iter()
        .find(|e| e["hypothesis"] == "oscillation-ratio")
        .expect("oscillation entry present");
    assert_eq!(h1["pass"], false);
    assert!(h1["worst_point"].as_array().unwrap().len() == 1);
}

#[test]
fn missing_field_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let broken = write_config(dir.path(), "broken.toml", &GOOD.replace("q = \"2.5\"\n", ""));
    let out = run(&["validate", "--config", &broken]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("q"), "diagnostic must name the key: {stderr}");
}

#[test]
fn unknown_suite_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let good = write_config(dir.path(), "good.toml", GOOD);
    let out = run(&["check-inequalities", "--config", &good, "--suite", "bogus"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bogus"));
}

#[test]
fn log_product_suite_passes() {
    let dir = tempfile::tempdir().unwrap();
    let good = write_config(dir.path(), "good.toml", GOOD);
    let out = run(&[
        "check-inequalities",
        "--config",
        &good,
        "--suite",
        "log-product",
        "--samples",
        "20000",
        "--seed",
        "7",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let body: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(body["all_pass"], true);
    assert_eq!(body["seed"], 7);
}

#[test]
fn eval_and_norm_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let good = write_config(dir.path(), "good.toml", GOOD);
    let out = run(&[
        "eval", "--config", &good, "--kind", "s", "--point", "0.5", "--t", "2.0",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.starts_with("# config_hash="));
    assert!(text.contains("t,value"));

    // Write a mesh function and take its norms.
    let mut csv = String::from("vertex_id,x,value\n");
    for i in 0..=32 {
        let x = i as f64 / 32.0;
        csv.push_str(&format!("{i},{x},{}\n", if i == 0 || i == 32 { 0.0 } else { 1.0 }));
    }
    let func = dir.path().join("func.csv");
    fs::write(&func, csv).unwrap();
    let out = run(&["norm", "--config", &good, "--input", func.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let body: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(body["norms"]["value"].as_f64().unwrap() > 0.0);
    assert!(body["norms"]["sobolev"].as_f64().unwrap() > 0.0);
}

#[test]
fn conjugate_table_is_monotone_csv() {
    let dir = tempfile::tempdir().unwrap();
    let good = write_config(dir.path(), "good.toml", GOOD);
    let out = run(&[
        "conjugate-table",
        "--config",
        &good,
        "--point",
        "0.5",
        "--ell",
        "2.0",
        "--u-max",
        "100",
        "--rows",
        "40",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8_lossy(&out.stdout);
    let mut last = f64::NEG_INFINITY;
    let mut rows = 0;
    for line in text.lines().skip(2) {
        let s: f64 = line.split(',').next().unwrap().parse().unwrap();
        assert!(s > last);
        last = s;
        rows += 1;
    }
    assert_eq!(rows, 40);
}

#[test]
fn solve_writes_solution_and_respects_cap() {
    let dir = tempfile::tempdir().unwrap();
    let good = write_config(dir.path(), "good.toml", GOOD);
    let outdir = dir.path().join("run");
    let out = run(&[
        "solve",
        "--config",
        &good,
        "--lambda",
        "0.1",
        "--out",
        outdir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(outdir.join("solution.csv")).unwrap();
    assert!(csv.starts_with("# config_hash="));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(outdir.join("solve.json")).unwrap()).unwrap();
    assert_eq!(report["report"]["converged"], true);
    assert!(report["report"]["energy"].as_f64().unwrap() < 0.0);

    // Above the admissible cap: usage error.
    let out = run(&["solve", "--config", &good, "--lambda", "0.5"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("admissible"));
}

#[test]
fn non_convergence_is_flagged_not_fatal() {
    // A starved iteration budget cannot reach the residual tolerance:
    // exit 1 with the converged flag down, not a usage error.
    let starved = GOOD.replace(
        "[hypotheses]",
        "[solver]\nmax_iters = 5\n\n[hypotheses]",
    );
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "starved.toml", &starved);
    let out = run(&["solve", "--config", &cfg, "--lambda", "0.1"]);
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("\"converged\": false"), "{text}");

    let out = run(&["sweep", "--config", &cfg, "--lambdas", "0.1,0.05"]);
    assert_eq!(out.status.code(), Some(1));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.lines().skip(2).all(|l| l.ends_with(",false")), "{text}");
}

#[test]
fn sweep_outputs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let good = write_config(dir.path(), "good.toml", GOOD);
    let mut outputs = Vec::new();
    for _ in 0..2 {
        let out = run(&[
            "sweep",
            "--config",
            &good,
            "--lambdas",
            "0.1,0.05",
            "--seed",
            "3",
        ]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        outputs.push(out.stdout);
    }
    assert_eq!(outputs[0], outputs[1], "sweep output must be byte-identical");
    let text = String::from_utf8_lossy(&outputs[0]);
    let norms: Vec<f64> = text
        .lines()
        .skip(2)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(norms.len(), 2);
    assert!(norms[1] < norms[0]);
}
