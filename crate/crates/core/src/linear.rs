//! Linear building blocks: time grids, trajectories, the variation-of-constants
//! solver for `x' = Ax + f`, the adjoint flow `-y' = Aᵀy`, Simpson quadrature,
//! the Kalman rank test and the observability Gramian.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::Serialize;

use crate::error::{Error, Result};

/// Singular values below this fraction of the largest count as zero.
pub const RANK_REL_TOL: f64 = 1e-9;
/// Smallest Gramian eigenvalue accepted as "observable".
pub const OBSERVABILITY_THRESHOLD: f64 = 1e-10;

/// Uniform grid `t_k = k T / M` on `[0, T]` with an even number of intervals.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TimeGrid {
    t_final: f64,
    intervals: usize,
}

impl TimeGrid {
    pub fn new(t_final: f64, intervals: usize) -> Result<Self> {
        if !(t_final.is_finite() && t_final > 0.0) {
            return Err(Error::InvalidGrid(format!("final time must be positive, got {t_final}")));
        }
        if intervals == 0 || !intervals.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!(
                "interval count must be even and positive, got {intervals}"
            )));
        }
        Ok(Self { t_final, intervals })
    }

    pub fn t_final(&self) -> f64 {
        self.t_final
    }

    pub fn intervals(&self) -> usize {
        self.intervals
    }

    /// Number of nodes, `M + 1`.
    pub fn len(&self) -> usize {
        self.intervals + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn step(&self) -> f64 {
        self.t_final / self.intervals as f64
    }

    pub fn node(&self, k: usize) -> f64 {
        if k == self.intervals {
            self.t_final
        } else {
            k as f64 * self.step()
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(|k| self.node(k))
    }

    /// Composite Simpson weights for the nodes of this grid.
    pub fn simpson_weights(&self) -> Vec<f64> {
        let h = self.step();
        (0..self.len())
            .map(|k| {
                let w = if k == 0 || k == self.intervals {
                    1.0
                } else if k % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                w * h / 3.0
            })
            .collect()
    }

    pub fn refined(&self, factor: usize) -> Result<Self> {
        Self::new(self.t_final, self.intervals * factor)
    }
}

/// Vector-valued function sampled on a [`TimeGrid`].
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    grid: TimeGrid,
    dim: usize,
    values: Vec<DVector<f64>>,
}

impl Trajectory {
    pub fn zeros(grid: TimeGrid, dim: usize) -> Self {
        Self {
            grid,
            dim,
            values: vec![DVector::zeros(dim); grid.len()],
        }
    }

    pub fn constant(grid: TimeGrid, value: DVector<f64>) -> Self {
        Self {
            grid,
            dim: value.len(),
            values: vec![value; grid.len()],
        }
    }

    pub fn from_fn(grid: TimeGrid, dim: usize, mut f: impl FnMut(f64) -> DVector<f64>) -> Result<Self> {
        let values: Vec<_> = grid.nodes().map(&mut f).collect();
        Self::from_values(grid, dim, values)
    }

    pub fn from_values(grid: TimeGrid, dim: usize, values: Vec<DVector<f64>>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Dimension {
                context: "trajectory node count",
                expected: grid.len(),
                found: values.len(),
            });
        }
        if let Some(v) = values.iter().find(|v| v.len() != dim) {
            return Err(Error::Dimension {
                context: "trajectory value",
                expected: dim,
                found: v.len(),
            });
        }
        Ok(Self { grid, dim, values })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn values(&self) -> &[DVector<f64>] {
        &self.values
    }

    pub fn at(&self, k: usize) -> &DVector<f64> {
        &self.values[k]
    }

    pub fn initial(&self) -> &DVector<f64> {
        &self.values[0]
    }

    pub fn terminal(&self) -> &DVector<f64> {
        &self.values[self.values.len() - 1]
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            grid: self.grid,
            dim: self.dim,
            values: self.values.iter().map(|v| v * s).collect(),
        }
    }

    /// `self += s * other`.
    pub fn axpy(&mut self, s: f64, other: &Trajectory) -> Result<()> {
        self.check_compatible(other)?;
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            a.axpy(s, b, 1.0);
        }
        Ok(())
    }

    /// Applies a linear map pointwise.
    pub fn mapped(&self, m: &DMatrix<f64>) -> Result<Self> {
        if m.ncols() != self.dim {
            return Err(Error::Dimension {
                context: "pointwise matrix map",
                expected: self.dim,
                found: m.ncols(),
            });
        }
        Ok(Self {
            grid: self.grid,
            dim: m.nrows(),
            values: self.values.iter().map(|v| m * v).collect(),
        })
    }

    pub(crate) fn check_compatible(&self, other: &Trajectory) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        if self.dim != other.dim {
            return Err(Error::Dimension {
                context: "trajectory dimension",
                expected: self.dim,
                found: other.dim,
            });
        }
        Ok(())
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Simpson approximation of the L² norm on `[0, T]`.
    pub fn l2_norm(&self) -> f64 {
        l2_inner(self, self).expect("self-compatible").max(0.0).sqrt()
    }

    /// Grid version of the solution-space norm: `sup_k |x(t_k)|` plus the
    /// L² norm of the forward-difference derivative.
    pub fn s_norm(&self) -> f64 {
        let h = self.grid.step();
        let deriv_sq: f64 = self
            .values
            .windows(2)
            .map(|w| (&w[1] - &w[0]).norm_squared() / h)
            .sum();
        self.sup_norm() + deriv_sq.sqrt()
    }

    /// Piecewise-cubic Lagrange interpolation through the four nearest nodes.
    pub fn interpolate(&self, t: f64) -> DVector<f64> {
        let m = self.grid.intervals;
        let h = self.grid.step();
        let s = (t / h).clamp(0.0, m as f64);
        let cell = (s.floor() as usize).min(m - 1);
        let start = if m < 3 { 0 } else { cell.saturating_sub(1).min(m - 3) };
        let count = if m < 3 { m + 1 } else { 4 };
        let mut out = DVector::zeros(self.dim);
        for i in 0..count {
            let xi = (start + i) as f64;
            let mut w = 1.0;
            for j in 0..count {
                if j != i {
                    let xj = (start + j) as f64;
                    w *= (s - xj) / (xi - xj);
                }
            }
            out.axpy(w, &self.values[start + i], 1.0);
        }
        out
    }
}

/// `∫₀ᵀ ⟨f(t), g(t)⟩ dt` by composite Simpson.
pub fn l2_inner(f: &Trajectory, g: &Trajectory) -> Result<f64> {
    f.check_compatible(g)?;
    Ok(f.grid
        .simpson_weights()
        .iter()
        .zip(f.values.iter().zip(&g.values))
        .map(|(w, (a, b))| w * a.dot(b))
        .sum())
}

/// Pair `(A, B)` of the controlled linear system `x' = Ax + Bv` on `[0, T]`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearSystem {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub t_final: f64,
}

impl LinearSystem {
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>, t_final: f64) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::NotSquare {
                rows: a.nrows(),
                cols: a.ncols(),
            });
        }
        if b.nrows() != a.nrows() {
            return Err(Error::Dimension {
                context: "rows of B",
                expected: a.nrows(),
                found: b.nrows(),
            });
        }
        if !(t_final.is_finite() && t_final > 0.0) {
            return Err(Error::InvalidGrid(format!("final time must be positive, got {t_final}")));
        }
        Ok(Self { a, b, t_final })
    }

    /// Uncontrolled system with a zero-column input matrix.
    pub fn autonomous(a: DMatrix<f64>, t_final: f64) -> Result<Self> {
        let n = a.nrows();
        Self::new(a, DMatrix::zeros(n, 0), t_final)
    }

    pub fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn input_dim(&self) -> usize {
        self.b.ncols()
    }
}

/// `e^M`, via nalgebra's Padé scaling-and-squaring.
pub fn matrix_exponential(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    if m.nrows() == 0 {
        return Ok(m.clone());
    }
    Ok(m.exp())
}

/// Largest singular value.
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().singular_values().max()
}

/// Upper bound on the norm of the linear solution map
/// `(x0, f) ↦ x` from `ℝⁿ × L²` (norm `|x0| + ‖f‖_L²`) into the solution
/// space (norm `sup|x| + ‖x'‖_L²`):
///
/// ```text
/// C = (1 + ‖A‖√T)·e^{‖A‖T}·max(1, √T) + 1
/// ```
///
/// The trailing `+ 1` accounts for `‖x'‖ ≤ ‖A‖·√T·sup|x| + ‖f‖`.
pub fn solution_operator_bound(sys: &LinearSystem) -> f64 {
    let a = spectral_norm(&sys.a);
    let t = sys.t_final;
    (1.0 + a * t.sqrt()) * (a * t).exp() * t.sqrt().max(1.0) + 1.0
}

/// Numerical rank of the Kalman matrix `(B, AB, …, A^{n-1}B)`.
pub fn kalman_rank(sys: &LinearSystem) -> usize {
    kalman_rank_with_tol(sys, RANK_REL_TOL)
}

pub fn kalman_rank_with_tol(sys: &LinearSystem, rel_tol: f64) -> usize {
    let n = sys.state_dim();
    let m = sys.input_dim();
    if n == 0 || m == 0 {
        return 0;
    }
    let mut k = DMatrix::zeros(n, n * m);
    let mut block = sys.b.clone();
    for i in 0..n {
        k.view_mut((0, i * m), (n, m)).copy_from(&block);
        block = &sys.a * block;
    }
    let sv = k.singular_values();
    let largest = sv.max();
    if largest <= 0.0 {
        return 0;
    }
    sv.iter().filter(|s| **s > rel_tol * largest).count()
}

/// Observability data of the adjoint flow.
#[derive(Clone, Debug, Serialize)]
pub struct GramianData {
    /// `∫₀ᵀ e^{-At} B Bᵀ e^{-Aᵀt} dt`.
    pub g: DMatrix<f64>,
    /// Smallest eigenvalue of `g`.
    pub c_t: f64,
    /// Norm of `y0 ↦ y` into `L²((0,T), ℝⁿ)`.
    pub alpha: f64,
    /// Spectral norm of `B`.
    pub b_norm: f64,
    /// `‖B‖·α/√c_T`; absent when `c_T` is below the observability threshold.
    pub beta: Option<f64>,
}

impl GramianData {
    pub fn is_observable(&self) -> bool {
        self.beta.is_some()
    }
}

/// Precomputed exponentials for one `(A, grid)` pair.
#[derive(Clone, Debug)]
pub struct Propagator {
    sys: LinearSystem,
    grid: TimeGrid,
    step_fwd: DMatrix<f64>,
    step_fwd2: DMatrix<f64>,
    step_bwd: DMatrix<f64>,
    /// `e^{-A t_k}` for every node.
    backward: Vec<DMatrix<f64>>,
}

impl Propagator {
    pub fn new(sys: &LinearSystem, grid: TimeGrid) -> Result<Self> {
        let h = grid.step();
        let step_fwd = matrix_exponential(&(&sys.a * h))?;
        let step_bwd = matrix_exponential(&(&sys.a * -h))?;
        let step_fwd2 = &step_fwd * &step_fwd;
        let mut backward = Vec::with_capacity(grid.len());
        let mut p = DMatrix::identity(sys.state_dim(), sys.state_dim());
        for _ in 0..grid.len() {
            backward.push(p.clone());
            p = &p * &step_bwd;
        }
        Ok(Self {
            sys: sys.clone(),
            grid,
            step_fwd,
            step_fwd2,
            step_bwd,
            backward,
        })
    }

    pub fn system(&self) -> &LinearSystem {
        &self.sys
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    /// Solves `x' = Ax + f`, `x(0) = x0` on the grid.
    ///
    /// Each step propagates exactly with `e^{Ah}` and integrates the source
    /// against the quadratic interpolant through three neighbouring nodes,
    /// giving third-order global accuracy.
    pub fn solve(&self, x0: &DVector<f64>, f: &Trajectory) -> Result<Trajectory> {
        let n = self.sys.state_dim();
        if x0.len() != n {
            return Err(Error::Dimension {
                context: "initial state",
                expected: n,
                found: x0.len(),
            });
        }
        if f.grid != self.grid {
            return Err(Error::GridMismatch);
        }
        if f.dim != n {
            return Err(Error::Dimension {
                context: "source term",
                expected: n,
                found: f.dim,
            });
        }
        let m = self.grid.intervals;
        let c = self.grid.step() / 12.0;
        let e = &self.step_fwd;
        let mut values = Vec::with_capacity(self.grid.len());
        let mut x = x0.clone();
        values.push(x.clone());
        let fv = &f.values;
        for k in 0..m {
            let src = if k + 2 <= m {
                (e * &fv[k]) * 5.0 + &fv[k + 1] * 8.0 - &self.step_bwd * &fv[k + 2]
            } else {
                (e * &fv[k]) * 8.0 + &fv[k + 1] * 5.0 - &self.step_fwd2 * &fv[k - 1]
            };
            x = e * &x + src * c;
            values.push(x.clone());
        }
        Ok(Trajectory {
            grid: self.grid,
            dim: n,
            values,
        })
    }

    /// Solves `-y' = Aᵀy`, `y(0) = y0`, i.e. `y(t) = e^{-Aᵀt} y0`.
    pub fn adjoint(&self, y0: &DVector<f64>) -> Result<Trajectory> {
        let n = self.sys.state_dim();
        if y0.len() != n {
            return Err(Error::Dimension {
                context: "adjoint initial state",
                expected: n,
                found: y0.len(),
            });
        }
        Ok(Trajectory {
            grid: self.grid,
            dim: n,
            values: self.backward.iter().map(|p| p.tr_mul(y0)).collect(),
        })
    }

    /// `∫₀ᵀ e^{-At} g(t) dt`, so that `∫⟨e^{-Aᵀt}y0, g⟩ = ⟨y0, result⟩`
    /// with the same quadrature as [`l2_inner`].
    pub fn pulled_back_integral(&self, g: &Trajectory) -> Result<DVector<f64>> {
        if g.grid != self.grid {
            return Err(Error::GridMismatch);
        }
        let mut acc = DVector::zeros(self.sys.state_dim());
        for ((w, p), v) in self.grid.simpson_weights().iter().zip(&self.backward).zip(&g.values) {
            acc += (p * v) * *w;
        }
        Ok(acc)
    }

    pub fn gramian(&self) -> GramianData {
        let n = self.sys.state_dim();
        let weights = self.grid.simpson_weights();
        let bbt = &self.sys.b * self.sys.b.transpose();
        let mut g = DMatrix::zeros(n, n);
        let mut h = DMatrix::zeros(n, n);
        for (w, p) in weights.iter().zip(&self.backward) {
            g += (p * &bbt * p.transpose()) * *w;
            h += (p * p.transpose()) * *w;
        }
        let g = (&g + g.transpose()) * 0.5;
        let h = (&h + h.transpose()) * 0.5;
        let c_t = min_eigenvalue(&g);
        let alpha = max_eigenvalue(&h).max(0.0).sqrt();
        let b_norm = spectral_norm(&self.sys.b);
        let beta = (c_t > OBSERVABILITY_THRESHOLD).then(|| b_norm * alpha / c_t.sqrt());
        GramianData {
            g,
            c_t,
            alpha,
            b_norm,
            beta,
        }
    }
}

fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    SymmetricEigen::new(m.clone()).eigenvalues.min()
}

fn max_eigenvalue(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    SymmetricEigen::new(m.clone()).eigenvalues.max()
}

/// Variation-of-constants solve on the grid of `f`.
pub fn solve_linear(sys: &LinearSystem, x0: &DVector<f64>, f: &Trajectory) -> Result<Trajectory> {
    Propagator::new(sys, f.grid)?.solve(x0, f)
}

pub fn solve_adjoint(sys: &LinearSystem, grid: TimeGrid, y0: &DVector<f64>) -> Result<Trajectory> {
    Propagator::new(sys, grid)?.adjoint(y0)
}

pub fn gramian(sys: &LinearSystem, grid: TimeGrid) -> Result<GramianData> {
    Ok(Propagator::new(sys, grid)?.gramian())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::{dmatrix, dvector};

    fn grid(t: f64, m: usize) -> TimeGrid {
        TimeGrid::new(t, m).unwrap()
    }

    #[test]
    fn grid_validation() {
        assert!(TimeGrid::new(1.0, 3).is_err());
        assert!(TimeGrid::new(0.0, 4).is_err());
        assert!(TimeGrid::new(1.0, 0).is_err());
        let g = grid(2.0, 4);
        assert_eq!(g.node(4), 2.0);
        let w: f64 = g.simpson_weights().iter().sum();
        assert_relative_eq!(w, 2.0, epsilon = 1e-15);
    }

    #[test]
    fn exponential_basics() {
        let z = DMatrix::<f64>::zeros(3, 3);
        assert_relative_eq!(matrix_exponential(&z).unwrap(), DMatrix::identity(3, 3));
        let d = DMatrix::from_diagonal(&dvector![1.0, -2.0, 0.5]);
        let e = matrix_exponential(&d).unwrap();
        for (i, a) in [1.0f64, -2.0, 0.5].iter().enumerate() {
            assert_relative_eq!(e[(i, i)], a.exp(), max_relative = 1e-12);
        }
        let nil = dmatrix![0.0, 1.0; 0.0, 0.0];
        assert_relative_eq!(
            matrix_exponential(&nil).unwrap(),
            dmatrix![1.0, 1.0; 0.0, 1.0],
            epsilon = 1e-14
        );
        assert!(matches!(
            matrix_exponential(&DMatrix::zeros(2, 3)),
            Err(Error::NotSquare { .. })
        ));
    }

    #[test]
    fn constant_solution_without_dynamics() {
        let sys = LinearSystem::autonomous(DMatrix::zeros(2, 2), 1.0).unwrap();
        let g = grid(1.0, 10);
        let x0 = dvector![1.0, -3.0];
        let x = solve_linear(&sys, &x0, &Trajectory::zeros(g, 2)).unwrap();
        for v in x.values() {
            assert_eq!(v, &x0);
        }
    }

    #[test]
    fn scalar_exponential_growth() {
        let sys = LinearSystem::autonomous(dmatrix![1.0], 1.0).unwrap();
        let g = grid(1.0, 200);
        let x = solve_linear(&sys, &dvector![1.0], &Trajectory::zeros(g, 1)).unwrap();
        let err = g
            .nodes()
            .zip(x.values())
            .map(|(t, v)| (v[0] - t.exp()).abs())
            .fold(0.0, f64::max);
        assert!(err <= 1e-8, "{err}");
    }

    #[test]
    fn constant_source_integrates_linearly() {
        let sys = LinearSystem::autonomous(DMatrix::zeros(2, 2), 2.0).unwrap();
        let g = grid(2.0, 8);
        let c = dvector![0.5, -1.0];
        let x0 = dvector![1.0, 1.0];
        let x = solve_linear(&sys, &x0, &Trajectory::constant(g, c.clone())).unwrap();
        for (t, v) in g.nodes().zip(x.values()) {
            assert_relative_eq!(*v, &x0 + &c * t, epsilon = 1e-14);
        }
    }

    #[test]
    fn adjoint_matches_closed_form() {
        let a = 0.7;
        let sys = LinearSystem::autonomous(dmatrix![a], 1.5).unwrap();
        let g = grid(1.5, 30);
        let y = solve_adjoint(&sys, g, &dvector![2.0]).unwrap();
        assert_eq!(y.initial()[0], 2.0);
        for (t, v) in g.nodes().zip(y.values()) {
            assert_relative_eq!(v[0], 2.0 * (-a * t).exp(), max_relative = 1e-12);
        }
        let zero = LinearSystem::autonomous(DMatrix::zeros(1, 1), 1.0).unwrap();
        let y = solve_adjoint(&zero, grid(1.0, 4), &dvector![3.0]).unwrap();
        assert!(y.values().iter().all(|v| v[0] == 3.0));
    }

    #[test]
    fn simpson_exactness() {
        let g = grid(1.0, 10);
        let e1 = Trajectory::constant(g, dvector![1.0, 0.0]);
        assert_relative_eq!(l2_inner(&e1, &e1).unwrap(), 1.0, epsilon = 1e-15);
        let f = Trajectory::from_fn(g, 1, |t| dvector![t]).unwrap();
        let one = Trajectory::constant(g, dvector![1.0]);
        assert_relative_eq!(l2_inner(&f, &one).unwrap(), 0.5, epsilon = 1e-15);
        let s = Trajectory::from_fn(grid(std::f64::consts::PI, 200), 1, |t| dvector![t.sin()]).unwrap();
        assert!((l2_inner(&s, &s).unwrap() - std::f64::consts::FRAC_PI_2).abs() <= 1e-8);
        assert!(matches!(l2_inner(&e1, &f), Err(Error::Dimension { .. })));
        let other = Trajectory::constant(grid(2.0, 10), dvector![1.0]);
        assert!(matches!(l2_inner(&one, &other), Err(Error::GridMismatch)));
    }

    #[test]
    fn kalman_examples() {
        let di = LinearSystem::new(dmatrix![0.0, 1.0; 0.0, 0.0], dmatrix![0.0; 1.0], 1.0).unwrap();
        assert_eq!(kalman_rank(&di), 2);
        let zero_b = LinearSystem::new(dmatrix![0.0, 1.0; 0.0, 0.0], DMatrix::zeros(2, 1), 1.0).unwrap();
        assert_eq!(kalman_rank(&zero_b), 0);
        let par = LinearSystem::new(DMatrix::identity(2, 2), dmatrix![1.0; 0.0], 1.0).unwrap();
        assert_eq!(kalman_rank(&par), 1);
    }

    #[test]
    fn scalar_gramian() {
        let sys = LinearSystem::new(dmatrix![0.0], dmatrix![1.0], 1.0).unwrap();
        let gd = gramian(&sys, grid(1.0, 20)).unwrap();
        assert_relative_eq!(gd.g[(0, 0)], 1.0, epsilon = 1e-14);
        assert_relative_eq!(gd.c_t, 1.0, epsilon = 1e-14);
        assert_relative_eq!(gd.alpha, 1.0, epsilon = 1e-14);
        assert_relative_eq!(gd.beta.unwrap(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn identity_input_gramian() {
        let sys = LinearSystem::new(DMatrix::zeros(3, 3), DMatrix::identity(3, 3), 2.5).unwrap();
        let gd = gramian(&sys, grid(2.5, 10)).unwrap();
        assert_relative_eq!(gd.g, DMatrix::identity(3, 3) * 2.5, epsilon = 1e-13);
    }

    #[test]
    fn uncontrollable_gramian_is_flagged() {
        let sys = LinearSystem::new(DMatrix::identity(2, 2), dmatrix![1.0; 0.0], 1.0).unwrap();
        let gd = gramian(&sys, grid(1.0, 20)).unwrap();
        assert!(gd.c_t.abs() <= OBSERVABILITY_THRESHOLD);
        assert!(!gd.is_observable());
    }

    #[test]
    fn interpolation_reproduces_cubics() {
        let g = grid(1.0, 8);
        let p = |t: f64| 1.0 - 2.0 * t + 3.0 * t * t - t * t * t;
        let tr = Trajectory::from_fn(g, 1, |t| dvector![p(t)]).unwrap();
        for t in [0.0, 0.01, 0.33, 0.5, 0.77, 0.99, 1.0] {
            assert_relative_eq!(tr.interpolate(t)[0], p(t), epsilon = 1e-13);
        }
    }

    #[test]
    fn s_norm_of_ramp() {
        // x(t) = t on [0, 1]: sup 1, derivative norm 1
        let tr = Trajectory::from_fn(grid(1.0, 10), 1, |t| dvector![t]).unwrap();
        assert_relative_eq!(tr.s_norm(), 2.0, epsilon = 1e-13);
    }
}
