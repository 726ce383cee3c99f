//! Butcher series indexed by non-degenerate planar trees, and explicit
//! open-loop controls for weakly nonlinear systems built from them.
//!
//! The crate solves
//!
//! ```text
//! x' = A x + f + λ F(x),   x(0) = x0,   F(x) = Σ_{p≥2} F_p(x, …, x)
//! ```
//!
//! as a sum over planar trees `x = Σ_b λ^{|b|} (Φ∗u)(b)`, and for the controlled
//! system `x' = Ax + Bv + λF(x)` it builds a control `v = Σ_b λ^{|b|} v(b)`
//! steering `x0` to `x(T) = 0`, where every `v(b)` is the minimizer of an
//! explicit quadratic functional on the adjoint initial datum.
//!
//! Modules, bottom up:
//!
//! * [`tree`]: planar trees, grafting, the coproduct and enumeration.
//! * [`linear`]: grids, trajectories, exponential propagators, Simpson
//!   quadrature, Kalman rank and the observability Gramian.
//! * [`series`]: polynomial nonlinearities, the elementary maps `Φ(b)`, the
//!   convolution `Φ∗u`, truncated series and their convergence certificate.
//! * [`control`]: tree-by-tree control synthesis, its certificate and an
//!   independent RK4 check of the terminal state.
//! * [`app`]: problem files, reports and the command implementations behind
//!   the `butcher-control` binary.

pub mod app;
pub mod control;
pub mod error;
pub mod linear;
pub mod series;
pub mod tree;

pub use control::{
    control_certificate, minimize_j_circ, minimize_j_tree, synthesize, verify_control, ControlCertificate,
    ControlProblem, Synthesis, Tolerances, TreeControl, Verification,
};
pub use error::{Error, Result};
pub use linear::{
    gramian, kalman_rank, l2_inner, matrix_exponential, solve_adjoint, solve_linear, GramianData, LinearSystem,
    Propagator, TimeGrid, Trajectory,
};
pub use series::{
    convergence_certificate, phi_norm_bound, ButcherEngine, ConvergenceCertificate, MultilinearTensor,
    PolynomialNonlinearity, SeriesData, SeriesSolution, SourceData,
};
pub use tree::{enumerate_trees, Forest, ForestTreeSum, PlanarTree};
