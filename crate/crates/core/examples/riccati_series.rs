//! Butcher series for the Riccati equation `x' = λx²`, `x(0) = 1`, whose
//! solution is `1 / (1 - λt)`.
//!
//! Run with `cargo run --example riccati_series`.

use butcher_control::{
    convergence_certificate, ButcherEngine, LinearSystem, MultilinearTensor, PolynomialNonlinearity, Propagator,
    SeriesData, SourceData, TimeGrid, Trajectory,
};
use nalgebra::{dmatrix, dvector};

fn main() -> butcher_control::Result<()> {
    let lambda = 0.2;
    let sys = LinearSystem::autonomous(dmatrix![0.0], 1.0)?;
    let grid = TimeGrid::new(1.0, 200)?;
    let nl = PolynomialNonlinearity::from_tensors(
        1,
        1.0,
        vec![MultilinearTensor::new(2, 1)?.with_entry(0, &[0, 0], 1.0)?],
    )?;
    let engine = ButcherEngine::new(Propagator::new(&sys, grid)?, nl.clone())?;
    let u = SeriesData::single(SourceData::new(dvector![1.0], Trajectory::zeros(grid, 1)));
    let f = Trajectory::zeros(grid, 1);

    println!("{:>5} {:>8} {:>12} {:>12} {:>12}", "N_max", "trees", "max error", "residual", "tail");
    for n_max in [1, 3, 5, 7, 9, 11] {
        let sol = engine.sum_series(&u, lambda, n_max)?;
        let err = grid
            .nodes()
            .zip(sol.x.values())
            .map(|(t, v)| (v[0] - 1.0 / (1.0 - lambda * t)).abs())
            .fold(0.0, f64::max);
        let res = engine.residual(&sol.x, &f, lambda)?.s_norm();
        println!(
            "{n_max:>5} {:>8} {err:>12.3e} {res:>12.3e} {:>12.3e}",
            sol.rows.len(),
            sol.tail_estimate
        );
    }

    let cert = convergence_certificate(&u, lambda, &sys, &nl);
    println!(
        "\nconvergence condition |λ| |u|⁻¹ |F|(16 C_Φ |u|) = {:.3} (certified: {})",
        cert.condition_value, cert.satisfied
    );
    println!("the condition is sufficient only; the series converges here for |λ| < 1");
    Ok(())
}
