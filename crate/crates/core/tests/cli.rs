use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_susy-sigma"));
    c.env_remove("SUSY_SIGMA_SEED");
    c
}

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn laplace_on_the_edge_fixture() {
    let edge = fixture("edge.json");
    let o = run(&["laplace", "--graph", edge.to_str().unwrap(), "--a", "1.2", "--b", "0.3", "--format", "table"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "0.68228");

    let o = run(&["laplace", "--graph", edge.to_str().unwrap(), "--a", "1.2", "--b", "0.3"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!((v["laplace"].as_f64().unwrap() - 0.68228).abs() < 5e-6);
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(run(&["run", "--check", "no-such-check"]).status.code(), Some(2));
    assert_eq!(run(&["run", "--check", "ward", "--samples", "0"]).status.code(), Some(2));
    assert_eq!(run(&["laplace", "--graph", "/nonexistent.json", "--a", "1", "--b", "0"]).status.code(), Some(3));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"vertices": ["1", "2"], "pinned": "d", "edges": [{"i": "1", "j": "d", "w": 1.0}]}"#).unwrap();
    assert_eq!(run(&["run", "--check", "ward", "--graph", bad.to_str().unwrap()]).status.code(), Some(3));

    // a degenerate threshold turns a passing check into a failure
    let o = run(&["run", "--check", "theta-conditional", "--samples", "1000", "--z-threshold", "0"]);
    assert_eq!(o.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["verdict"], "fail");
}

#[test]
fn list_checks() {
    let o = run(&["list-checks"]);
    assert_eq!(o.status.code(), Some(0));
    let v: Vec<serde_json::Value> = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v.len(), 17);
    assert!(v.iter().any(|c| c["id"] == "image-measure-super"));
}

#[test]
fn run_writes_report_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let o = run(&["run", "--check", "jacobian-sdet", "--seed", "5", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out).unwrap()).unwrap();
    assert_eq!(v["check"], "jacobian-sdet");
    assert_eq!(v["verdict"], "pass");
    assert_eq!(v["seed"], 5);
    for c in v["coefficients"].as_array().unwrap() {
        assert_eq!(c["z"], 0.0);
        for key in ["subset", "estimate", "stderr", "reference", "z"] {
            assert!(c.get(key).is_some(), "missing {key}");
        }
    }
}

#[test]
fn seed_from_environment() {
    let o = bin().args(["run", "--check", "spinor-identity"]).env("SUSY_SIGMA_SEED", "42").output().unwrap();
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["seed"], 42);
}

#[test]
fn sample_streams_json_lines() {
    let tri = fixture("triangle.json");
    let o = run(&["sample", "--graph", tri.to_str().unwrap(), "--samples", "256", "--chains", "2", "--burnin", "100"]);
    assert_eq!(o.status.code(), Some(0));
    let lines: Vec<serde_json::Value> = stdout(&o).lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 256);
    for l in &lines {
        assert_eq!(l["u"].as_array().unwrap().len(), 2);
        assert_eq!(l["s"].as_array().unwrap().len(), 2);
    }
}

#[test]
fn suite_is_byte_identical_across_runs_and_parallelism() {
    let args = ["suite", "--filter", "[mjrs]*", "--seed", "7", "--samples", "4096", "--reproducible"];
    let a = run(&args);
    let b = run(&[&args[..], &["--parallelism", "3"]].concat());
    assert_eq!(a.status.code(), Some(0), "{}", stdout(&a));
    assert_eq!(a.stdout, b.stdout);
    let v: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(v["failed"], 0);
    assert!(v["reports"].as_array().unwrap().len() >= 5);
}
