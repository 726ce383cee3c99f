//! Tree-indexed open-loop control of `x' = Ax + Bv + λF(x)` towards `x(T) = 0`.
//!
//! Every tree `b` gets an adjoint initial datum `ỹ(b)` minimizing
//!
//! ```text
//! J(o)(y0) = ½ ∫|Bᵀy|² + ⟨x0, y0⟩
//! J(b)(y0) = ½ ∫|Bᵀy|² + ∫⟨y, F_r[(Φ∗u)(b_1), …, (Φ∗u)(b_r)]⟩,   B₋(b) = b_1•…•b_r
//! ```
//!
//! with `y(t) = e^{-Aᵀt} y0`. Both are quadratic with Hessian the Gramian `G`,
//! so the minimizer solves `G y0 = -x0` (resp. `-c_b`, `c_b = ∫ e^{-At} g_b`).
//! The control is `v(b) = Bᵀ ỹ(b)` and the full control `v = Σ λ^{|b|} v(b)`.

use std::collections::BTreeMap;

use nalgebra::{Cholesky, DVector, Dyn};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linear::{
    kalman_rank_with_tol, l2_inner, solution_operator_bound, GramianData, LinearSystem, Propagator, TimeGrid,
    Trajectory,
};
use crate::series::{ButcherEngine, PolynomialNonlinearity, SeriesData, SeriesEvaluator, SourceData, TREE_COUNT_BASE};
use crate::tree::{enumerate_trees_with_max_arity, PlanarTree};

/// Refinement of the verification grid relative to the problem grid.
pub const VERIFY_REFINEMENT: usize = 2;

const DIVERGENCE_LIMIT: f64 = 1e150;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Tolerances {
    /// Relative singular-value cutoff for the Kalman rank.
    pub rank: f64,
    /// Smallest admissible Gramian eigenvalue.
    pub observability: f64,
    /// Acceptable `|x(T)|` after verification.
    pub verification: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            rank: crate::linear::RANK_REL_TOL,
            observability: crate::linear::OBSERVABILITY_THRESHOLD,
            verification: 1e-4,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ControlProblem {
    pub sys: LinearSystem,
    pub nonlinearity: PolynomialNonlinearity,
    pub x0: DVector<f64>,
    pub lambda: f64,
    pub grid: TimeGrid,
    pub n_max: usize,
    pub tolerances: Tolerances,
}

impl ControlProblem {
    pub fn new(
        sys: LinearSystem,
        nonlinearity: PolynomialNonlinearity,
        x0: DVector<f64>,
        lambda: f64,
        grid: TimeGrid,
        n_max: usize,
    ) -> Result<Self> {
        let n = sys.state_dim();
        if x0.len() != n {
            return Err(Error::Dimension {
                context: "initial state",
                expected: n,
                found: x0.len(),
            });
        }
        if nonlinearity.dim() != n {
            return Err(Error::Dimension {
                context: "nonlinearity vs state",
                expected: n,
                found: nonlinearity.dim(),
            });
        }
        if grid.t_final() != sys.t_final {
            return Err(Error::InvalidGrid(format!(
                "grid ends at {} but the system horizon is {}",
                grid.t_final(),
                sys.t_final
            )));
        }
        if n_max == 0 {
            return Err(Error::InvalidGrid("n_max must be at least 1".into()));
        }
        Ok(Self {
            sys,
            nonlinearity,
            x0,
            lambda,
            grid,
            n_max,
            tolerances: Tolerances::default(),
        })
    }

    pub fn with_tolerances(mut self, tolerances: Tolerances) -> Self {
        self.tolerances = tolerances;
        self
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn with_n_max(mut self, n_max: usize) -> Self {
        self.n_max = n_max;
        self
    }
}

/// Minimizer and control attached to one tree.
#[derive(Clone, Debug)]
pub struct TreeControl {
    pub tree: PlanarTree,
    /// Minimizer `ỹ(b)` of `J(b)`.
    pub y0_min: DVector<f64>,
    /// `v(b) = Bᵀ e^{-Aᵀt} ỹ(b)`, in `ℝᵐ`.
    pub v: Trajectory,
    /// `u(o) = (x0, Bv(o))`, `u(b) = (0, Bv(b))` otherwise.
    pub u: SourceData,
    /// Gradient of the linear part of `J(b)`: `x0` for the leaf, `c_b` otherwise.
    pub linear_term: DVector<f64>,
    /// `g_b = F_r[(Φ∗u)(B₋(b))]`; `None` for the leaf.
    pub source: Option<Trajectory>,
}

struct Synthesizer<'p> {
    prob: &'p ControlProblem,
    engine: ButcherEngine,
    gramian: GramianData,
    chol: Cholesky<f64, Dyn>,
    rank: usize,
}

impl<'p> Synthesizer<'p> {
    fn new(prob: &'p ControlProblem) -> Result<Self> {
        let prop = Propagator::new(&prob.sys, prob.grid)?;
        let n = prob.sys.state_dim();
        let rank = kalman_rank_with_tol(&prob.sys, prob.tolerances.rank);
        let gramian = prop.gramian();
        if rank < n || gramian.c_t <= prob.tolerances.observability || gramian.beta.is_none() {
            return Err(Error::NotControllable {
                rank,
                n,
                c_t: gramian.c_t,
            });
        }
        let chol = Cholesky::new(gramian.g.clone()).ok_or(Error::NotControllable {
            rank,
            n,
            c_t: gramian.c_t,
        })?;
        let engine = ButcherEngine::new(prop, prob.nonlinearity.clone())?;
        Ok(Self {
            prob,
            engine,
            gramian,
            chol,
            rank,
        })
    }

    fn build(&self, tree: PlanarTree, linear_term: DVector<f64>, source: Option<Trajectory>) -> Result<TreeControl> {
        let y0_min = -self.chol.solve(&linear_term);
        let prop = self.engine.propagator();
        let y = prop.adjoint(&y0_min)?;
        let bt = self.prob.sys.b.transpose();
        let v = y.mapped(&bt)?;
        let x0 = if tree.is_leaf() {
            self.prob.x0.clone()
        } else {
            DVector::zeros(self.prob.sys.state_dim())
        };
        let u = SourceData::new(x0, v.mapped(&self.prob.sys.b)?);
        Ok(TreeControl {
            tree,
            y0_min,
            v,
            u,
            linear_term,
            source,
        })
    }

    fn circ(&self) -> Result<TreeControl> {
        self.build(PlanarTree::leaf(), self.prob.x0.clone(), None)
    }

    fn tree(&self, b: &PlanarTree, eval: &SeriesEvaluator<'_>) -> Result<TreeControl> {
        let n = self.prob.sys.state_dim();
        let source = match eval.nonlinear_source(b)? {
            Some(g) => g,
            None => Trajectory::zeros(self.prob.grid, n),
        };
        let c_b = self.engine.propagator().pulled_back_integral(&source)?;
        self.build(b.clone(), c_b, Some(source))
    }

    /// Trees to synthesize, by increasing `|b|` and then enumeration order.
    fn schedule(&self) -> Vec<Vec<PlanarTree>> {
        let cap = self.prob.nonlinearity.max_order();
        let mut levels: Vec<Vec<PlanarTree>> = Vec::new();
        for b in enumerate_trees_with_max_arity(self.prob.n_max, cap) {
            let k = b.internal();
            if levels.len() <= k {
                levels.resize(k + 1, Vec::new());
            }
            levels[k].push(b);
        }
        levels
    }
}

/// Minimizer of `J(o)`: `G ỹ = -x0`.
pub fn minimize_j_circ(prob: &ControlProblem) -> Result<TreeControl> {
    Synthesizer::new(prob)?.circ()
}

/// Minimizer of `J(b)` for `b ≠ o`, given the controls of lower-grading trees.
pub fn minimize_j_tree(
    b: &PlanarTree,
    prob: &ControlProblem,
    prior: &BTreeMap<PlanarTree, TreeControl>,
) -> Result<TreeControl> {
    if b.is_leaf() {
        return Err(Error::LeafHasNoSubtrees);
    }
    let synth = Synthesizer::new(prob)?;
    let grading = b.internal();
    let cap = prob.nonlinearity.max_order();
    if prob.nonlinearity.tensor(b.root_arity()).is_some() {
        for child in b.children() {
            for (upper, _) in child.cuts() {
                for e in upper {
                    if e.max_arity() <= cap && !prior.contains_key(&e) {
                        return Err(Error::MissingDependency(b.clone(), e));
                    }
                }
            }
        }
    }
    let mut u = SeriesData::new();
    for (tree, tc) in prior.range(..).filter(|(t, _)| t.internal() < grading) {
        u.insert(tree.clone(), tc.u.clone());
    }
    let eval = synth.engine.evaluator(u);
    synth.tree(b, &eval)
}

#[derive(Clone, Debug, Serialize)]
pub struct ControlCertificate {
    pub lambda: f64,
    pub c_t: f64,
    pub alpha: f64,
    pub b_norm: f64,
    pub beta: f64,
    /// `16 (1 + β) β`.
    pub c: f64,
    /// `1 / β`.
    pub c_prime: f64,
    /// Bound on the norm of the linear solution map.
    pub phi_circ_norm_bound: f64,
    /// `|x0| + ‖B v(o)‖_L²`.
    pub u_circ_norm: f64,
    pub norm_bounds: Vec<(usize, f64)>,
    /// `C' |λ| C_Φ ‖u(o)‖⁻¹ |F|(C ‖u(o)‖)`.
    pub condition1_value: f64,
    /// `16 ‖u(o)‖ / (1 - condition1)`, when `condition1 < 1`.
    pub u_norm_bound: Option<f64>,
    /// `|λ| |u|⁻¹ |F|(16 C_Φ |u|)` at the bound above.
    pub condition2_value: Option<f64>,
    pub satisfied: [bool; 2],
}

pub fn control_certificate(prob: &ControlProblem, tree_controls: &[TreeControl]) -> Result<ControlCertificate> {
    let circ = tree_controls
        .iter()
        .find(|tc| tc.tree.is_leaf())
        .ok_or_else(|| Error::MissingDependency(PlanarTree::leaf(), PlanarTree::leaf()))?;
    let prop = Propagator::new(&prob.sys, prob.grid)?;
    let gram = prop.gramian();
    let beta = gram.beta.ok_or(Error::NotControllable {
        rank: kalman_rank_with_tol(&prob.sys, prob.tolerances.rank),
        n: prob.sys.state_dim(),
        c_t: gram.c_t,
    })?;
    Ok(certificate_from_parts(prob, &gram, beta, circ.u.norm()))
}

fn certificate_from_parts(prob: &ControlProblem, gram: &GramianData, beta: f64, u_circ: f64) -> ControlCertificate {
    let nl = &prob.nonlinearity;
    let lambda = prob.lambda;
    let c_phi = solution_operator_bound(&prob.sys);
    let c = TREE_COUNT_BASE * (1.0 + beta) * beta;
    let c_prime = 1.0 / beta;
    let (condition1_value, u_norm_bound, condition2_value) = if u_circ == 0.0 {
        (0.0, Some(0.0), Some(0.0))
    } else {
        let cond1 = c_prime * lambda.abs() * c_phi / u_circ * nl.majorant(c * u_circ);
        if cond1 < 1.0 {
            let bound = TREE_COUNT_BASE * u_circ / (1.0 - cond1);
            let cond2 = lambda.abs() / bound * nl.majorant(TREE_COUNT_BASE * c_phi * bound);
            (cond1, Some(bound), Some(cond2))
        } else {
            (cond1, None, None)
        }
    };
    ControlCertificate {
        lambda,
        c_t: gram.c_t,
        alpha: gram.alpha,
        b_norm: gram.b_norm,
        beta,
        c,
        c_prime,
        phi_circ_norm_bound: c_phi,
        u_circ_norm: u_circ,
        norm_bounds: nl.norm_bounds(),
        condition1_value,
        u_norm_bound,
        condition2_value,
        satisfied: [condition1_value < 1.0, condition2_value.is_some_and(|v| v < 1.0)],
    }
}

/// A-priori bound on `‖v(b)‖_L²` in terms of the leaf data:
/// `‖B‖⁻¹ β^{‖b‖-1} ‖u(o)‖^{‖b‖} ((1+β) C_Φ)^{N(b)-1} Π ‖F_{r_b(j)}‖`.
pub fn tree_control_bound(b: &PlanarTree, cert: &ControlCertificate, nonlinearity: &PolynomialNonlinearity) -> f64 {
    let arities: f64 = b
        .internal_arities()
        .into_iter()
        .map(|r| nonlinearity.norm_bound(r))
        .product();
    cert.beta.powi(b.leaves() as i32 - 1)
        * cert.u_circ_norm.powi(b.leaves() as i32)
        * ((1.0 + cert.beta) * cert.phi_circ_norm_bound).powi(b.order() as i32 - 1)
        * arities
        / cert.b_norm
}

#[derive(Clone, Debug)]
pub struct Synthesis {
    /// `v = Σ λ^{|b|} v(b)` on the problem grid.
    pub control: Trajectory,
    pub tree_controls: Vec<TreeControl>,
    pub certificate: ControlCertificate,
    pub gramian: GramianData,
    pub kalman_rank: usize,
    /// `Σ |λ|^{|b|} ‖u(b)‖` over the synthesized trees.
    pub u_norm: f64,
}

/// Runs the tree-by-tree synthesis for all trees with `N(b) <= n_max`.
pub fn synthesize(prob: &ControlProblem) -> Result<Synthesis> {
    let synth = Synthesizer::new(prob)?;
    let circ = synth.circ()?;
    let mut eval = synth.engine.evaluator(SeriesData::new());
    eval.insert(PlanarTree::leaf(), circ.u.clone());
    let mut controls = vec![circ];
    for level in synth.schedule().into_iter().skip(1) {
        let produced: Vec<TreeControl> = level
            .par_iter()
            .map(|b| synth.tree(b, &eval))
            .collect::<Result<_>>()?;
        for tc in &produced {
            eval.insert(tc.tree.clone(), tc.u.clone());
        }
        controls.extend(produced);
    }
    let mut control = Trajectory::zeros(prob.grid, prob.sys.input_dim());
    for tc in &controls {
        control.axpy(prob.lambda.powi(tc.tree.internal() as i32), &tc.v)?;
    }
    let beta = synth.gramian.beta.expect("checked in Synthesizer::new");
    let certificate = certificate_from_parts(prob, &synth.gramian, beta, controls[0].u.norm());
    let u_norm = eval.data().norm(prob.lambda);
    Ok(Synthesis {
        control,
        tree_controls: controls,
        certificate,
        gramian: synth.gramian.clone(),
        kalman_rank: synth.rank,
        u_norm,
    })
}

/// `J(b)(y0)` evaluated directly from the adjoint trajectory.
pub fn j_functional(prob: &ControlProblem, tc: &TreeControl, y0: &DVector<f64>) -> Result<f64> {
    let prop = Propagator::new(&prob.sys, prob.grid)?;
    let y = prop.adjoint(y0)?;
    let bty = y.mapped(&prob.sys.b.transpose())?;
    let quad = 0.5 * l2_inner(&bty, &bty)?;
    match &tc.source {
        None => Ok(quad + prob.x0.dot(y0)),
        Some(g) => Ok(quad + l2_inner(&y, g)?),
    }
}

/// First-variation residuals on the canonical adjoint basis:
/// `⟨e_i, x0⟩ + ∫⟨y_i, Bv(o)⟩` for the leaf, `∫⟨y_i, Bv(b) + g_b⟩` otherwise.
pub fn euler_lagrange_residuals(prob: &ControlProblem, tc: &TreeControl) -> Result<Vec<f64>> {
    let prop = Propagator::new(&prob.sys, prob.grid)?;
    let n = prob.sys.state_dim();
    (0..n)
        .map(|i| {
            let e = DVector::from_fn(n, |k, _| if k == i { 1.0 } else { 0.0 });
            let y = prop.adjoint(&e)?;
            let mut r = l2_inner(&y, &tc.u.f)?;
            match &tc.source {
                None => r += prob.x0[i],
                Some(g) => r += l2_inner(&y, g)?,
            }
            Ok(r)
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct Verification {
    /// State on the refined verification grid.
    pub x: Trajectory,
    pub terminal_norm: f64,
}

/// Integrates `x' = Ax + Bv(t) + λF(x)` from `x0` with classical RK4 on a
/// grid [`VERIFY_REFINEMENT`] times finer than the problem grid. The control
/// is evaluated between nodes by cubic interpolation.
pub fn verify_control(prob: &ControlProblem, control: &Trajectory) -> Result<Verification> {
    if control.grid() != &prob.grid {
        return Err(Error::GridMismatch);
    }
    if control.dim() != prob.sys.input_dim() {
        return Err(Error::Dimension {
            context: "control",
            expected: prob.sys.input_dim(),
            found: control.dim(),
        });
    }
    let fine = prob.grid.refined(VERIFY_REFINEMENT)?;
    let h = fine.step();
    let a = &prob.sys.a;
    let b = &prob.sys.b;
    let rhs = |t: f64, x: &DVector<f64>| -> DVector<f64> {
        a * x + b * control.interpolate(t) + prob.nonlinearity.eval(x) * prob.lambda
    };
    let mut x = prob.x0.clone();
    let mut values = Vec::with_capacity(fine.len());
    values.push(x.clone());
    for k in 0..fine.intervals() {
        let t = fine.node(k);
        let k1 = rhs(t, &x);
        let k2 = rhs(t + h / 2.0, &(&x + &k1 * (h / 2.0)));
        let k3 = rhs(t + h / 2.0, &(&x + &k2 * (h / 2.0)));
        let k4 = rhs(t + h, &(&x + &k3 * h));
        x += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        if !x.iter().all(|v| v.is_finite()) || x.norm() > DIVERGENCE_LIMIT {
            return Err(Error::Diverged { t: fine.node(k + 1) });
        }
        values.push(x.clone());
    }
    let x = Trajectory::from_values(fine, prob.sys.state_dim(), values)?;
    let terminal_norm = x.terminal().norm();
    Ok(Verification { x, terminal_norm })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::MultilinearTensor;
    use approx::assert_relative_eq;
    use nalgebra::{dmatrix, dvector, DMatrix};

    fn scalar(lambda: f64, f2: bool, n_max: usize) -> ControlProblem {
        let sys = LinearSystem::new(dmatrix![0.0], dmatrix![1.0], 1.0).unwrap();
        let mut nl = PolynomialNonlinearity::zero(1, 1.0);
        if f2 {
            nl.insert(MultilinearTensor::new(2, 1).unwrap().with_entry(0, &[0, 0], 1.0).unwrap())
                .unwrap();
        }
        ControlProblem::new(sys, nl, dvector![1.0], lambda, TimeGrid::new(1.0, 200).unwrap(), n_max).unwrap()
    }

    #[test]
    fn zero_state_needs_no_control() {
        let p = scalar(0.1, true, 3);
        let p = ControlProblem { x0: dvector![0.0], ..p };
        let tc = minimize_j_circ(&p).unwrap();
        assert_eq!(tc.y0_min[0], 0.0);
        assert_eq!(tc.v.sup_norm(), 0.0);
    }

    #[test]
    fn scalar_leaf_control() {
        let p = scalar(0.0, false, 1);
        let tc = minimize_j_circ(&p).unwrap();
        assert_relative_eq!(tc.y0_min[0], -1.0, epsilon = 1e-14);
        assert!(tc.v.values().iter().all(|v| (v[0] + 1.0).abs() < 1e-14));
        let x = Propagator::new(&p.sys, p.grid).unwrap().solve(&p.x0, &tc.u.f).unwrap();
        assert!(x.terminal()[0].abs() < 1e-13);
        for (t, v) in p.grid.nodes().zip(x.values()) {
            assert_relative_eq!(v[0], 1.0 - t, epsilon = 1e-13);
        }
    }

    #[test]
    fn cherry_control_is_minus_one_third() {
        let p = scalar(0.1, true, 3);
        let circ = minimize_j_circ(&p).unwrap();
        let prior = BTreeMap::from([(PlanarTree::leaf(), circ)]);
        let b: PlanarTree = "(oo)".parse().unwrap();
        let tc = minimize_j_tree(&b, &p, &prior).unwrap();
        assert_relative_eq!(tc.linear_term[0], 1.0 / 3.0, epsilon = 1e-12);
        assert_relative_eq!(tc.y0_min[0], -1.0 / 3.0, epsilon = 1e-12);
        assert!(tc.v.values().iter().all(|v| (v[0] + 1.0 / 3.0).abs() < 1e-12));
    }

    #[test]
    fn missing_dependency_is_reported() {
        let p = scalar(0.1, true, 5);
        let b: PlanarTree = "((oo)o)".parse().unwrap();
        let circ = minimize_j_circ(&p).unwrap();
        let prior = BTreeMap::from([(PlanarTree::leaf(), circ)]);
        assert!(matches!(
            minimize_j_tree(&b, &p, &prior),
            Err(Error::MissingDependency(_, e)) if e.encoding() == "(oo)"
        ));
        assert!(matches!(
            minimize_j_tree(&PlanarTree::leaf(), &p, &prior),
            Err(Error::LeafHasNoSubtrees)
        ));
    }

    #[test]
    fn no_nonlinearity_means_leaf_control_only() {
        let p = scalar(0.3, false, 7);
        let s = synthesize(&p).unwrap();
        let circ = &s.tree_controls[0];
        assert_eq!(s.control, circ.v);
        assert_eq!(s.tree_controls.len(), 1);
    }

    #[test]
    fn higher_controls_vanish_for_zero_tensor() {
        // an F_2 tensor with no entries is present but zero
        let sys = LinearSystem::new(dmatrix![0.0], dmatrix![1.0], 1.0).unwrap();
        let nl = PolynomialNonlinearity::from_tensors(1, 1.0, vec![MultilinearTensor::new(2, 1).unwrap()]).unwrap();
        let p = ControlProblem::new(sys, nl, dvector![1.0], 0.5, TimeGrid::new(1.0, 20).unwrap(), 5).unwrap();
        let s = synthesize(&p).unwrap();
        assert!(s.tree_controls.len() > 1);
        for tc in &s.tree_controls[1..] {
            assert_eq!(tc.v.sup_norm(), 0.0);
        }
    }

    #[test]
    fn uncontrollable_is_rejected() {
        let sys = LinearSystem::new(dmatrix![0.0, 1.0; 0.0, 0.0], DMatrix::zeros(2, 1), 1.0).unwrap();
        let p = ControlProblem::new(
            sys,
            PolynomialNonlinearity::zero(2, 1.0),
            dvector![1.0, 0.0],
            0.0,
            TimeGrid::new(1.0, 20).unwrap(),
            1,
        )
        .unwrap();
        assert!(matches!(synthesize(&p), Err(Error::NotControllable { rank: 0, n: 2, .. })));
    }

    #[test]
    fn zero_control_without_dynamics_keeps_state() {
        let p = scalar(0.0, false, 1);
        let v = Trajectory::zeros(p.grid, 1);
        let ver = verify_control(&p, &v).unwrap();
        assert_eq!(ver.terminal_norm, 1.0);
    }

    #[test]
    fn divergence_is_reported() {
        let p = scalar(1e6, true, 1);
        let v = Trajectory::zeros(p.grid, 1);
        assert!(matches!(verify_control(&p, &v), Err(Error::Diverged { .. })));
    }

    #[test]
    fn certificate_trivial_cases() {
        let s = synthesize(&scalar(0.4, false, 3)).unwrap();
        assert_eq!(s.certificate.condition1_value, 0.0);
        assert_eq!(s.certificate.condition2_value, Some(0.0));
        assert_eq!(s.certificate.satisfied, [true, true]);
        let s = synthesize(&scalar(0.0, true, 3)).unwrap();
        assert_eq!(s.certificate.condition1_value, 0.0);
        assert_relative_eq!(s.certificate.u_norm_bound.unwrap(), 16.0 * s.certificate.u_circ_norm);
        assert_eq!(s.certificate.satisfied, [true, true]);
    }
}
