//! Loads a JSON problem, runs the control command and writes the report and
//! trajectory tables to a temporary directory.
//!
//! Run with `cargo run --example problem_file [path/to/problem.json]`.

use butcher_control::app::{self, ProblemFile};

fn main() -> butcher_control::Result<()> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/data/nonlinear_oscillator.json").to_string());
    let problem = ProblemFile::load(&path)?;
    println!("loaded {path}: n = {}, m = {}, lambda = {}", problem.n, problem.m, problem.lambda);

    let out = app::cmd_control(&problem)?;
    let r = &out.report;
    println!("Kalman rank {}, c_T = {:.4e}", r.kalman_rank, r.gramian.c_t);
    println!("{} tree controls, |x(T)| = {:.3e}, verified: {}", r.trees.len(), r.terminal_norm, r.verified);

    let dir = std::env::temp_dir().join("butcher-control-example");
    std::fs::create_dir_all(&dir)?;
    std::fs::write(dir.join("report.json"), serde_json::to_string_pretty(r)?)?;
    app::write_trajectory_csv(dir.join("control.csv"), &out.control, "v")?;
    app::write_trajectory_csv(dir.join("state.csv"), &out.state, "x")?;
    println!("wrote report.json, control.csv and state.csv to {}", dir.display());

    let back = app::read_trajectory_csv(dir.join("control.csv"))?;
    println!("control table re-reads exactly: {}", back == out.control);
    Ok(())
}
