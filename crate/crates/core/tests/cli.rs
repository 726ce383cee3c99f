use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use butcher_control::app::{self, ProblemFile, EXIT_KALMAN, EXIT_OK, EXIT_PARSE, EXIT_VERIFICATION};
use butcher_control::{solve_linear, Trajectory};
use serde_json::Value;
use tempfile::TempDir;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(format!("{name}.json"))
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_butcher-control")).args(args).output().unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("{e}: {}", String::from_utf8_lossy(&out.stderr));
    })
}

fn write_problem(dir: &TempDir, name: &str, edit: impl FnOnce(&mut ProblemFile)) -> PathBuf {
    let mut p = ProblemFile::load(data("scalar_showcase")).unwrap();
    edit(&mut p);
    let path = dir.path().join(format!("{name}.json"));
    std::fs::write(&path, p.to_json()).unwrap();
    path
}

#[test]
fn trees_listing() {
    let out = run(&["trees", "--n-max", "1"]);
    assert_eq!(out.status.code(), Some(EXIT_OK));
    let r = json(&out);
    assert_eq!(r["count"], 1);
    assert_eq!(r["trees"][0]["encoding"], "o");

    let r = json(&run(&["trees", "--n-max", "6", "--coproduct"]));
    let row = r["trees"].as_array().unwrap().iter().find(|t| t["encoding"] == "((ooo)o)").unwrap();
    assert_eq!((row["leaves"].as_u64(), row["internal"].as_u64(), row["order"].as_u64()), (Some(4), Some(2), Some(6)));
    let mut terms: Vec<String> = row["coproduct"]
        .as_array()
        .unwrap()
        .iter()
        .map(|t| format!("{} ⊗ {}", t["forest"].as_str().unwrap(), t["tree"].as_str().unwrap()))
        .collect();
    terms.sort();
    assert_eq!(terms, ["((ooo)o) ⊗ o", "(ooo)•o ⊗ (oo)", "o•o•o•o ⊗ ((ooo)o)"]);
}

#[test]
fn solve_writes_a_lossless_trajectory() {
    let dir = TempDir::new().unwrap();
    let out = run(&["solve", "--input", data("riccati").to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(EXIT_OK), "{}", String::from_utf8_lossy(&out.stderr));
    let report: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["certificate"]["satisfied"], false);
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning"));
    let x = app::read_trajectory_csv(dir.path().join("state.csv")).unwrap();
    let dev = x
        .grid()
        .nodes()
        .zip(x.values())
        .map(|(t, v)| (v[0] - 1.0 / (1.0 - 0.2 * t)).abs())
        .fold(0.0, f64::max);
    assert!(dev <= 5e-4);
    let csv = std::fs::read_to_string(dir.path().join("state.csv")).unwrap();
    assert_eq!(app::trajectory_to_csv(&x, "x"), csv);
}

#[test]
fn solve_without_nonlinearity_is_the_linear_solve() {
    let dir = TempDir::new().unwrap();
    let problem = write_problem(&dir, "linear", |p| {
        p.tensors.clear();
        p.lambda = 3.0;
        p.grid_points = 100;
    });
    let source = dir.path().join("f.csv");
    let p = ProblemFile::load(&problem).unwrap();
    let grid = p.grid().unwrap();
    let f = Trajectory::from_fn(grid, 1, |t| nalgebra::dvector![(5.0 * t).cos()]).unwrap();
    app::write_trajectory_csv(&source, &f, "f").unwrap();
    let out = run(&[
        "solve",
        "--input",
        problem.to_str().unwrap(),
        "--source",
        source.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(EXIT_OK));
    let x = app::read_trajectory_csv(dir.path().join("state.csv")).unwrap();
    let expected = solve_linear(&p.system().unwrap(), &p.initial_state().unwrap(), &f).unwrap();
    assert_eq!(x, expected);
    let r = json(&out);
    assert!(r["residual_s_norm"].as_f64().unwrap() < 1e-3, "{}", r["residual_s_norm"]);
    assert_eq!(r["certificate"]["condition_value"], 0.0);
}

#[test]
fn control_exit_statuses() {
    let out = run(&["control", "--input", data("scalar_showcase").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(EXIT_OK));
    let r = json(&out);
    assert!(r["terminal_norm"].as_f64().unwrap() <= 1e-4);
    assert_eq!(r["verified"], true);

    let out = run(&["control", "--input", data("scalar_showcase").to_str().unwrap(), "--n-max", "1"]);
    assert_eq!(out.status.code(), Some(EXIT_VERIFICATION));

    let out = run(&["control", "--input", data("uncontrollable").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(EXIT_KALMAN));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Kalman rank condition"));

    let dir = TempDir::new().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"n": 1, "m": 1, "T": 1.0, "A": [[0.0]], "B": [[1.0]], "x0": [1.0, 2.0]}"#).unwrap();
    let out = run(&["control", "--input", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(EXIT_PARSE));
    assert!(String::from_utf8_lossy(&out.stderr).contains("`x0`"));

    let out = run(&["control", "--input", data("scalar_showcase").to_str().unwrap(), "--grid", "201"]);
    assert_eq!(out.status.code(), Some(EXIT_PARSE));
}

#[test]
fn double_integrator_control_files() {
    let dir = TempDir::new().unwrap();
    let out = run(&[
        "control",
        "--input",
        data("double_integrator").to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
        "--threads",
        "2",
    ]);
    assert_eq!(out.status.code(), Some(EXIT_OK));
    let r = json(&out);
    assert!(r["terminal_norm"].as_f64().unwrap() <= 1e-6);
    let v = app::read_trajectory_csv(dir.path().join("control.csv")).unwrap();
    assert_eq!(v.dim(), 1);
    assert_eq!(v.grid().intervals(), 400);
    let x = app::read_trajectory_csv(dir.path().join("state.csv")).unwrap();
    assert_eq!(x.dim(), 2);
}

#[test]
fn reports_are_deterministic() {
    let a = json(&run(&["control", "--input", data("nonlinear_oscillator").to_str().unwrap()]));
    let b = json(&run(&["control", "--input", data("nonlinear_oscillator").to_str().unwrap(), "--threads", "1"]));
    assert_eq!(app::without_timing(&a).unwrap(), app::without_timing(&b).unwrap());
}

#[test]
fn certify_cases() {
    let dir = TempDir::new().unwrap();
    let big = write_problem(&dir, "big", |p| p.lambda = 1e3);
    let r = json(&run(&["certify", "--input", big.to_str().unwrap()]));
    let c = &r["control_certificate"];
    assert_eq!(c["satisfied"], serde_json::json!([false, false]));
    assert!(c["condition1_value"].as_f64().unwrap() > 1.0);

    let zero_lambda = write_problem(&dir, "zero_lambda", |p| p.lambda = 0.0);
    let no_f = write_problem(&dir, "no_f", |p| p.tensors.clear());
    for path in [zero_lambda, no_f] {
        let r = json(&run(&["certify", "--input", path.to_str().unwrap()]));
        let c = &r["control_certificate"];
        assert_eq!(c["satisfied"], serde_json::json!([true, true]));
        assert_eq!(c["condition1_value"], 0.0);
        assert_eq!(c["condition2_value"], 0.0);
    }
}
