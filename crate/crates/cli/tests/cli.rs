use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn lily(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lily"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", stdout(out)))
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn verify_tuned_instance_succeeds() {
    let out = lily(&["verify", "--d", "2", "--beta-star-q", "1", "--n", "1"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let record = json(&out);
    assert_eq!(record["pass"], Value::Bool(true));
    assert!(record["checks"].as_array().unwrap().len() >= 5);
}

#[test]
fn verify_untuned_instance_fails_with_record() {
    let out = lily(&["verify", "--d", "2", "--beta", "1.0", "--n", "1"]);
    assert_eq!(code(&out), 3);
    let record = json(&out);
    assert_eq!(record["pass"], Value::Bool(false));
}

#[test]
fn route_reports_unit_weight_probability() {
    let out = lily(&["route", "--d", "2", "--beta", "1.0", "--n", "1"]);
    assert_eq!(code(&out), 0);
    let r = json(&out);
    let p = r["p1f_at_tstar"].as_f64().unwrap();
    assert!(p > 0.94 && p < 1.0, "{p}");
    assert!(r["closed_vs_numeric_residual"].as_f64().unwrap() < 1e-10);
}

#[test]
fn usage_and_parameter_errors() {
    assert_eq!(code(&lily(&["frobnicate"])), 1);
    assert_eq!(code(&lily(&[])), 1);
    let bad = lily(&["route", "--d", "1", "--n", "1"]);
    assert_eq!(code(&bad), 2);
    assert!(!bad.stderr.is_empty());
    assert_eq!(code(&lily(&["route", "--d", "2", "--n", "2", "--target", "5"])), 2);
    assert_eq!(code(&lily(&["route", "--d", "2", "--beta", "1", "--beta-star-q", "1"])), 2);
    assert_eq!(code(&lily(&["--help"])), 0);
}

#[test]
fn sweep_writes_stable_csv() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for p in [&a, &b] {
        let out = lily(&["sweep", "--d", "16..100", "--beta", "unit", "--n", "1", "--out", path_str(p)]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    }
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("d,n,beta,t_star,p1f,p2r,gap,curv1f,curv2r,proj_residual,closed_vs_numeric")
    );
    assert_eq!(lines.count(), 85);
}

#[test]
fn thread_cap_does_not_change_output() {
    let args = ["sweep", "--d", "2..12", "--n", "1,2"];
    let capped = Command::new(env!("CARGO_BIN_EXE_lily"))
        .args(args)
        .env("LILY_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(code(&capped), 0);
    assert_eq!(capped.stdout, lily(&args).stdout);
}

#[test]
fn sweep_star_mode_is_perfect() {
    let out = lily(&["sweep", "--d", "2,3,7", "--beta", "star", "--n", "1,2"]);
    assert_eq!(code(&out), 0);
    for line in stdout(&out).lines().skip(1) {
        let p1f: f64 = line.split(',').nth(4).unwrap().parse().unwrap();
        assert!((1.0 - p1f).abs() < 1e-10, "{line}");
    }
}

#[test]
fn flags_and_config_agree() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.json");
    std::fs::write(&cfg, r#"{"lily":{"n":2,"d":3,"target":1,"beta_star_q":1}}"#).unwrap();
    let from_cfg = lily(&["route", "--config", path_str(&cfg)]);
    let from_flags = lily(&["route", "--n", "2", "--d", "3", "--target", "1", "--beta-star-q", "1"]);
    assert_eq!(code(&from_cfg), 0);
    assert_eq!(from_cfg.stdout, from_flags.stdout);

    // a flag overrides the matching config field
    let overridden = lily(&["route", "--config", path_str(&cfg), "--d", "5"]);
    let direct = lily(&["route", "--n", "2", "--d", "5", "--target", "1", "--beta-star-q", "1"]);
    assert_eq!(overridden.stdout, direct.stdout);
}

#[test]
fn malformed_config_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, r#"{"lily":{"n":1,"d":"three"}}"#).unwrap();
    let out = lily(&["route", "--config", path_str(&cfg)]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("lily.d"));
}

#[test]
fn build_then_reduce_and_evolve_from_graph_file() {
    let dir = tempfile::tempdir().unwrap();
    let graph = dir.path().join("g.json");
    let out = lily(&["build", "--n", "3", "--d", "2", "--beta-star-q", "1", "--out", path_str(&graph)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(&graph).unwrap()).unwrap();
    assert_eq!(doc["n_vertices"], 10);

    // seed on the target output vertex (2 + d + n)
    let out = lily(&["reduce", "--graph", path_str(&graph), "--seed", "7"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let red = json(&out);
    assert_eq!(red["dim"], 5);

    let out = lily(&["evolve", "--graph", path_str(&graph), "--psi0", "0", "--points", "3", "--t-end", "3.141592653589793"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    let rows: Vec<Vec<f64>> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[0].len(), 11);
    assert!((rows[0][1] - 1.0).abs() < 1e-15);
    assert!(rows[2][8] > 1.0 - 1e-10, "population on the target output at pi");
}

#[test]
fn graph_and_lily_flags_conflict() {
    let dir = tempfile::tempdir().unwrap();
    let graph = dir.path().join("g.json");
    assert_eq!(code(&lily(&["build", "--d", "2", "--out", path_str(&graph)])), 0);
    assert_eq!(code(&lily(&["reduce", "--graph", path_str(&graph), "--d", "3"])), 2);
}

#[test]
fn missing_graph_file_is_a_runtime_error() {
    let out = lily(&["reduce", "--graph", "/nonexistent/g.json"]);
    assert_eq!(code(&out), 1);
}
