//! Drives the built binary end to end through temp directories: exit
//! codes, report contents, override plumbing, determinism of the
//! artifacts, and the canned scenarios.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn maxslope(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_maxslope"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary should spawn")
}

fn read_json(path: &Path) -> serde_json::Value {
    let text = fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    serde_json::from_str(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

const QUADRATIC: &str = r#"{
  "name": "quadratic_run",
  "space": {"kind": "euclidean", "dim": 1},
  "functional": {"kind": "quadratic", "scale": 1.0,
                 "center": {"space": "euclidean", "coords": [0.0]}},
  "p": 2.0,
  "p_prime": [4.0],
  "initial": {"space": "euclidean", "coords": [1.0]},
  "source": {"kind": "oracle", "horizon": 16.0, "nodes": 2000},
  "checks": {"energy_identity": true, "duality": true, "convexity": true,
             "slope_monotone": true, "stationarity": true, "regularizing": true}
}"#;

/// No checks and no transforms: runs of this config always pass, so the
/// plumbing tests below can vary the grid freely.
const MINIMAL: &str = r#"{
  "name": "minimal_run",
  "space": {"kind": "euclidean", "dim": 1},
  "functional": {"kind": "quadratic", "scale": 1.0,
                 "center": {"space": "euclidean", "coords": [0.0]}},
  "p": 2.0,
  "initial": {"space": "euclidean", "coords": [1.0]},
  "source": {"kind": "oracle", "horizon": 16.0, "nodes": 2000},
  "checks": {"energy_identity": false, "duality": false}
}"#;

const BLOWUP: &str = r#"{
  "name": "blowup_run",
  "space": {"kind": "euclidean", "dim": 1},
  "functional": {"kind": "negative_quadratic"},
  "p": 2.0,
  "p_prime": [1.5],
  "initial": {"space": "euclidean", "coords": [1.0]},
  "source": {"kind": "oracle", "horizon": 10.0, "nodes": 4000},
  "checks": {"energy_identity": true, "energy_scaled": true, "duality": true},
  "expected_blocked": true
}"#;

#[test]
fn verify_passes_and_reports_every_enabled_check() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("config.json"), QUADRATIC).unwrap();

    let out = maxslope(&["verify", "--config", "config.json", "--out", "run"], dir.path());
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));

    let report = read_json(&dir.path().join("run/report.json"));
    assert_eq!(report["passed"], true);
    assert_eq!(report["knots"], 2000);
    let names: Vec<&str> =
        report["checks"].as_array().unwrap().iter().map(|c| c["name"].as_str().unwrap()).collect();
    assert!(names.contains(&"energy_identity"));
    assert!(names.contains(&"convexity_along_curve"));
    assert!(names.contains(&"slope_monotone"));
    assert_eq!(report["transforms"][0]["status"], "ok");
    assert_eq!(report["transforms"][0]["passed"], true);
    assert!(report["regularizing"]["reports"].as_array().unwrap().len() >= 3);

    for artifact in ["flow.json", "flow.csv", "transform_p4.json", "transform_p4.csv"] {
        assert!(dir.path().join("run").join(artifact).exists(), "{artifact} missing");
    }
}

#[test]
fn expected_blocked_transform_exits_zero_and_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("config.json"), BLOWUP).unwrap();

    let out = maxslope(&["verify", "--config", "config.json", "--out", "run"], dir.path());
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));

    let report = read_json(&dir.path().join("run/report.json"));
    assert_eq!(report["transforms"][0]["status"], "blocked");
    assert_eq!(report["transforms"][0]["condition"], "blocked");
    assert_eq!(report["passed"], true);
}

#[test]
fn refused_exponent_exits_nonzero_with_a_reason() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("config.json"), BLOWUP).unwrap();

    let out = maxslope(
        &["verify", "--config", "config.json", "--out", "run", "--set", "p_prime=[4.0]"],
        dir.path(),
    );
    assert!(!out.status.success(), "p' above p0 with lambda < 0 must be refused");
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("p0"), "stderr should name the violated bound: {stderr}");
}

#[test]
fn overrides_change_the_run_and_reports_stay_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("config.json"), MINIMAL).unwrap();

    let args = &["verify", "--config", "config.json", "--out", "a", "--set", "source.nodes=51"];
    let out = maxslope(args, dir.path());
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let report = read_json(&dir.path().join("a/report.json"));
    assert_eq!(report["knots"], 51, "--set source.nodes must reach the solver");

    let args = &["verify", "--config", "config.json", "--out", "b", "--set", "source.nodes=51"];
    assert!(maxslope(args, dir.path()).status.success());
    let a = fs::read(dir.path().join("a/report.json")).unwrap();
    let b = fs::read(dir.path().join("b/report.json")).unwrap();
    assert_eq!(a, b, "report.json must be byte-identical across reruns");
    let a = fs::read(dir.path().join("a/flow.json")).unwrap();
    let b = fs::read(dir.path().join("b/flow.json")).unwrap();
    assert_eq!(a, b, "flow.json must be byte-identical across reruns");
}

#[test]
fn solve_mode_exports_the_flow_without_checks() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("config.json"), QUADRATIC).unwrap();

    let out = maxslope(&["solve", "--config", "config.json", "--out", "run"], dir.path());
    assert!(out.status.success());
    let report = read_json(&dir.path().join("run/report.json"));
    assert_eq!(report["checks"].as_array().unwrap().len(), 0);
    assert_eq!(report["transforms"].as_array().unwrap().len(), 0);
    assert!(dir.path().join("run/flow.csv").exists());
    assert!(!dir.path().join("run/transform_p4.json").exists());
}

#[test]
fn reproduce_scenario_passes_and_writes_a_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = maxslope(&["reproduce", "normlike_stationary", "--out", "run"], dir.path());
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));

    let summary = read_json(&dir.path().join("run/summary.json"));
    assert_eq!(summary["passed"], true);
    assert_eq!(summary["name"], "normlike_stationary");
    assert!(summary["findings"].as_array().unwrap().len() >= 3);

    let out = maxslope(&["reproduce", "no_such_scenario"], dir.path());
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("blowup_example"));
}

#[test]
fn sweep_runs_one_verify_per_combination() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("config.json"), MINIMAL).unwrap();

    let out = maxslope(
        &["sweep", "--config", "config.json", "--out", "grid", "--set", "source.nodes=101,201"],
        dir.path(),
    );
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));

    let first = read_json(&dir.path().join("grid/source.nodes=101/report.json"));
    let second = read_json(&dir.path().join("grid/source.nodes=201/report.json"));
    assert_eq!(first["knots"], 101);
    assert_eq!(second["knots"], 201);
    assert_eq!(first["passed"], true);
    assert_eq!(second["passed"], true);
}
