//! Minimum-norm control of the double integrator `x1' = x2`, `x2' = v`
//! from `(1, 0)` to the origin in time 1.
//!
//! Run with `cargo run --example linear_hum`.

use butcher_control::linear::kalman_rank;
use butcher_control::{
    gramian, synthesize, verify_control, ControlProblem, LinearSystem, PolynomialNonlinearity, TimeGrid,
};
use nalgebra::{dmatrix, dvector};

fn main() -> butcher_control::Result<()> {
    let sys = LinearSystem::new(dmatrix![0.0, 1.0; 0.0, 0.0], dmatrix![0.0; 1.0], 1.0)?;
    let grid = TimeGrid::new(1.0, 400)?;
    println!("Kalman rank: {}", kalman_rank(&sys));

    let g = gramian(&sys, grid)?;
    println!("Gramian:{}", g.g);
    println!("c_T = {:.6}, alpha = {:.6}, beta = {:.6}", g.c_t, g.alpha, g.beta.unwrap_or(f64::NAN));

    let prob = ControlProblem::new(sys, PolynomialNonlinearity::zero(2, 1.0), dvector![1.0, 0.0], 0.0, grid, 1)?;
    let s = synthesize(&prob)?;
    let circ = &s.tree_controls[0];
    println!("adjoint minimizer y0 = {:?}", circ.y0_min.as_slice());
    for t in [0.0, 0.25, 0.5, 0.75, 1.0] {
        println!("  v({t:.2}) = {:+.6}   (exact 12t - 6 = {:+.6})", s.control.interpolate(t)[0], 12.0 * t - 6.0);
    }
    let ver = verify_control(&prob, &s.control)?;
    println!("|x(T)| = {:.3e}", ver.terminal_norm);
    println!("||v||_L2 = {:.6} <= |x0|/sqrt(c_T) = {:.6}", circ.v.l2_norm(), 1.0 / g.c_t.sqrt());
    Ok(())
}
