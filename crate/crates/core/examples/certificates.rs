//! Sufficient convergence conditions for the control series, as a function
//! of the coupling `λ`.
//!
//! Run with `cargo run --example certificates`.

use butcher_control::{
    control_certificate, minimize_j_circ, ControlProblem, LinearSystem, MultilinearTensor, PolynomialNonlinearity,
    TimeGrid,
};
use nalgebra::{dmatrix, dvector};

fn main() -> butcher_control::Result<()> {
    let sys = LinearSystem::new(dmatrix![0.0], dmatrix![1.0], 1.0)?;
    let nl = PolynomialNonlinearity::from_tensors(
        1,
        1.0,
        vec![MultilinearTensor::new(2, 1)?.with_entry(0, &[0, 0], 1.0)?],
    )?;
    let prob = ControlProblem::new(sys, nl, dvector![1.0], 0.0, TimeGrid::new(1.0, 200)?, 7)?;
    let circ = minimize_j_circ(&prob)?;

    let c = control_certificate(&prob, std::slice::from_ref(&circ))?;
    println!("c_T = {:.6}  alpha = {:.6}  beta = {:.6}", c.c_t, c.alpha, c.beta);
    println!("C = {:.3}  C' = {:.3}  C_Phi = {:.3}  |u(o)| = {:.6}", c.c, c.c_prime, c.phi_circ_norm_bound, c.u_circ_norm);

    println!("\n{:>10} {:>14} {:>14} {:>14}  satisfied", "lambda", "condition 1", "|u| bound", "condition 2");
    for lambda in [0.0, 1e-7, 1e-6, 1e-5, 1e-4, 1e-3, 0.1, 1e3] {
        let c = control_certificate(&prob.clone().with_lambda(lambda), std::slice::from_ref(&circ))?;
        let show = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.4e}"));
        println!(
            "{lambda:>10.1e} {:>14.4e} {:>14} {:>14}  {:?}",
            c.condition1_value,
            show(c.u_norm_bound),
            show(c.condition2_value),
            c.satisfied
        );
    }
    Ok(())
}
