//! Tree-by-tree control of `x' = v + λx²` from `x(0) = 1` to `x(1) = 0`.
//!
//! Run with `cargo run --example nonlinear_control`.

use butcher_control::{
    synthesize, verify_control, ControlProblem, LinearSystem, MultilinearTensor, PolynomialNonlinearity, TimeGrid,
};
use nalgebra::{dmatrix, dvector};

fn main() -> butcher_control::Result<()> {
    let sys = LinearSystem::new(dmatrix![0.0], dmatrix![1.0], 1.0)?;
    let nl = PolynomialNonlinearity::from_tensors(
        1,
        1.0,
        vec![MultilinearTensor::new(2, 1)?.with_entry(0, &[0, 0], 1.0)?],
    )?;
    let base = ControlProblem::new(sys, nl, dvector![1.0], 0.1, TimeGrid::new(1.0, 200)?, 7)?;

    let s = synthesize(&base)?;
    println!("{:<14} {:>4} {:>14}", "tree", "|b|", "v(b) (const)");
    for tc in &s.tree_controls {
        println!("{:<14} {:>4} {:>14.10}", tc.tree.encoding(), tc.tree.internal(), tc.v.at(0)[0]);
    }

    println!("\n{:>5} {:>12}", "N_max", "|x(T)|");
    for n_max in [1, 3, 5, 7] {
        let prob = base.clone().with_n_max(n_max);
        let s = synthesize(&prob)?;
        println!("{n_max:>5} {:>12.3e}", verify_control(&prob, &s.control)?.terminal_norm);
    }

    // without the correction trees the linear control misses the target
    let linear_only = base.clone().with_n_max(1);
    let s = synthesize(&linear_only)?;
    let miss = verify_control(&linear_only, &s.control)?;
    println!("\nleaf control alone ends at x(T) = {:+.4e}", miss.x.terminal()[0]);
    Ok(())
}
