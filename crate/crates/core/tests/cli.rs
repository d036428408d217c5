use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> String {
    let mut p = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    p.push("tests/fixtures");
    p.push(name);
    p.to_string_lossy().into_owned()
}

fn recflow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_recflow"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("json report on stdout")
}

#[test]
fn path_demand_solves_to_unit_congestion() {
    let out = recflow(&["solve", "--generate", "path:3", "--demand", "+1@1,-1@3", "--eps", "0.1"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(&out);
    let c = r["result"]["congestion"].as_f64().unwrap();
    assert!((1.0..=1.1).contains(&c), "congestion {c}");
    assert_eq!(r["result"]["converged"], Value::Bool(true));
}

#[test]
fn grid_st_verifies() {
    let grid = fixture("grid4.dimacs");
    let out = recflow(&["verify", "--input", &grid, "--st", "1", "16", "--eps", "0.1"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(&out);
    let value = r["result"]["value"].as_f64().unwrap();
    assert!((value - 2.0).abs() <= 0.2 && value <= 2.0 + 1e-9);
}

#[test]
fn random_demand_verifies() {
    let out = recflow(&[
        "verify", "--generate", "grid2d:12x12", "--caps", "1,10", "--demand", "random", "--seed", "5",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn reports_repeat_apart_from_timing() {
    let cycle = fixture("cycle4.dimacs");
    let args = ["solve", "--input", cycle.as_str(), "--demand", "random", "--seed", "11"];
    let (mut a, mut b) = (report(&recflow(&args)), report(&recflow(&args)));
    a.as_object_mut().unwrap().remove("timing");
    b.as_object_mut().unwrap().remove("timing");
    assert_eq!(a, b);
}

#[test]
fn report_file_and_trace_are_written() {
    let dir = tempfile::tempdir().unwrap();
    let report_path = dir.path().join("r.json");
    let trace_path = dir.path().join("t.csv");
    let out = recflow(&[
        "solve",
        "--generate",
        "random_gnm:40,120",
        "--caps",
        "1,10",
        "--demand",
        "random",
        "--report",
        report_path.to_str().unwrap(),
        "--trace",
        trace_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r: Value = serde_json::from_str(&std::fs::read_to_string(&report_path).unwrap()).unwrap();
    assert!(r["result"]["congestion"].as_f64().unwrap() > 0.0);
    let trace = std::fs::read_to_string(&trace_path).unwrap();
    assert!(trace.starts_with("iter,potential,congestion,best_cut_ratio"));
}

#[test]
fn missing_demand_file_is_an_input_error() {
    let grid = fixture("grid4.dimacs");
    let out = recflow(&["solve", "--input", &grid, "--demand", "/nonexistent/demand.txt"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn missing_graph_is_an_input_error() {
    let out = recflow(&["solve", "--input", "/nonexistent/graph.dimacs", "--demand", "random"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn exhausted_budget_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("tight.cfg");
    std::fs::write(&cfg, "max_iters = 1\n").unwrap();
    let out = recflow(&[
        "solve",
        "--generate",
        "grid2d:20x20",
        "--caps",
        "1,10",
        "--demand",
        "random",
        "--eps",
        "0.01",
        "--seed",
        "3",
        "--config",
        cfg.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sparsify_writes_dimacs() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("h.dimacs");
    let out = recflow(&[
        "sparsify",
        "--generate",
        "random_gnm:10,30",
        "--caps",
        "1,10",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let h = recflow::dimacs::load_graph(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(h.n(), 10);
    assert!(h.m() >= 9 && h.is_connected());
}

#[test]
fn build_approximator_exports_a_tree() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("tree.json");
    let out = recflow(&[
        "build-approximator",
        "--generate",
        "grid2d:6x6",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(std::fs::metadata(&path).unwrap().len() > 0);
}
