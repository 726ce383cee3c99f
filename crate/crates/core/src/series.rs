//! Tree-indexed solution of `x' = Ax + f + λF(x)`.
//!
//! For each tree `b` the elementary map `Φ(b)` is `‖b‖`-linear in its inputs
//! `(x0_i, f_i)`:
//!
//! ```text
//! Φ(o)(x0, f)            = solution of x' = Ax + f, x(0) = x0
//! Φ(B₊(b_1, …, b_r))(…)  = Φ(o)(0, F_r[Φ(b_1)(…), …, Φ(b_r)(…)])
//! ```
//!
//! where the inputs are handed to the children left to right by leaf count.
//! Given tree-indexed data `u`, the convolution `(Φ∗u)(b)` sums `Φ(c)(u(E))`
//! over the coproduct terms `E ⊗ c` of `b`, and the series solution is
//! `x = Σ_b λ^{|b|} (Φ∗u)(b)`.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, RwLock};

use nalgebra::DVector;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linear::{solution_operator_bound, spectral_norm, LinearSystem, Propagator, Trajectory};
use crate::tree::{enumerate_trees_with_max_arity, PlanarTree};

/// Bound on the number of trees with `N` vertices is `16^N`; this is the base.
pub const TREE_COUNT_BASE: f64 = 16.0;

/// A `p`-linear map `ℝⁿ × … × ℝⁿ → ℝⁿ` stored as sparse coefficients
/// `(out, [in_1, …, in_p]) ↦ value`.
#[derive(Clone, Debug, PartialEq)]
pub struct MultilinearTensor {
    order: usize,
    dim: usize,
    entries: BTreeMap<(usize, Vec<usize>), f64>,
}

impl MultilinearTensor {
    pub fn new(order: usize, dim: usize) -> Result<Self> {
        if order < 2 {
            return Err(Error::Nonlinearity(format!(
                "tensor order must be at least 2, got {order}"
            )));
        }
        Ok(Self {
            order,
            dim,
            entries: BTreeMap::new(),
        })
    }

    /// Adds `value` to the coefficient at `(out, inputs)`.
    pub fn add_entry(&mut self, out: usize, inputs: &[usize], value: f64) -> Result<()> {
        if inputs.len() != self.order {
            return Err(Error::Nonlinearity(format!(
                "order-{} tensor entry has {} input indices",
                self.order,
                inputs.len()
            )));
        }
        if out >= self.dim || inputs.iter().any(|&i| i >= self.dim) {
            return Err(Error::Nonlinearity(format!(
                "index out of range for dimension {}: out {out}, inputs {inputs:?}",
                self.dim
            )));
        }
        *self.entries.entry((out, inputs.to_vec())).or_insert(0.0) += value;
        Ok(())
    }

    pub fn with_entry(mut self, out: usize, inputs: &[usize], value: f64) -> Result<Self> {
        self.add_entry(out, inputs, value)?;
        Ok(self)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, &[usize], f64)> {
        self.entries.iter().map(|((o, i), v)| (*o, i.as_slice(), *v))
    }

    /// Square root of the sum of squared coefficients; dominates the
    /// multilinear operator norm by Cauchy–Schwarz.
    pub fn frobenius(&self) -> f64 {
        self.entries.values().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn apply(&self, args: &[&DVector<f64>]) -> DVector<f64> {
        debug_assert_eq!(args.len(), self.order);
        let mut out = DVector::zeros(self.dim);
        for ((o, ins), v) in &self.entries {
            let mut prod = *v;
            for (arg, &i) in args.iter().zip(ins) {
                prod *= arg[i];
            }
            out[*o] += prod;
        }
        out
    }
}

/// `F(x) = Σ_p F_p(x, …, x)`, applied pointwise in time.
#[derive(Clone, Debug, PartialEq)]
pub struct PolynomialNonlinearity {
    dim: usize,
    tensors: BTreeMap<usize, MultilinearTensor>,
    norm_bounds: BTreeMap<usize, f64>,
    t_final: f64,
}

impl PolynomialNonlinearity {
    /// The zero nonlinearity on `ℝⁿ`. `t_final` fixes the pointwise-to-L²
    /// factor `√T` in the norm bounds.
    pub fn zero(dim: usize, t_final: f64) -> Self {
        Self {
            dim,
            tensors: BTreeMap::new(),
            norm_bounds: BTreeMap::new(),
            t_final,
        }
    }

    pub fn from_tensors(dim: usize, t_final: f64, tensors: Vec<MultilinearTensor>) -> Result<Self> {
        let mut nl = Self::zero(dim, t_final);
        for t in tensors {
            nl.insert(t)?;
        }
        Ok(nl)
    }

    pub fn insert(&mut self, tensor: MultilinearTensor) -> Result<()> {
        if tensor.dim != self.dim {
            return Err(Error::Dimension {
                context: "nonlinearity tensor",
                expected: self.dim,
                found: tensor.dim,
            });
        }
        let p = tensor.order;
        if self.tensors.contains_key(&p) {
            return Err(Error::Nonlinearity(format!("duplicate tensor of order {p}")));
        }
        self.norm_bounds
            .insert(p, self.t_final.sqrt() * tensor.frobenius());
        self.tensors.insert(p, tensor);
        Ok(())
    }

    /// Replaces the norm bound of `F_p` by a larger user-supplied value.
    pub fn with_norm_bound(mut self, p: usize, bound: f64) -> Result<Self> {
        let computed = self.norm_bound(p);
        if bound.is_nan() || bound < computed {
            return Err(Error::Nonlinearity(format!(
                "norm bound {bound} for order {p} is below the computed bound {computed}"
            )));
        }
        self.norm_bounds.insert(p, bound);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_zero(&self) -> bool {
        self.tensors.values().all(|t| t.entries.is_empty())
    }

    /// Highest order present (0 when there are no tensors).
    pub fn max_order(&self) -> usize {
        self.tensors.keys().next_back().copied().unwrap_or(0)
    }

    pub fn tensor(&self, p: usize) -> Option<&MultilinearTensor> {
        self.tensors.get(&p)
    }

    pub fn tensors(&self) -> impl Iterator<Item = &MultilinearTensor> {
        self.tensors.values()
    }

    /// Upper bound on `‖F_p‖` as a map from the solution space to L²:
    /// `√T · ‖F_p‖_F`, or 0 when `F_p` is absent.
    pub fn norm_bound(&self, p: usize) -> f64 {
        self.norm_bounds.get(&p).copied().unwrap_or(0.0)
    }

    pub fn norm_bounds(&self) -> Vec<(usize, f64)> {
        self.norm_bounds.iter().map(|(p, b)| (*p, *b)).collect()
    }

    /// The majorant polynomial `|F|(z) = Σ_p ‖F_p‖ z^p`.
    pub fn majorant(&self, z: f64) -> f64 {
        self.norm_bounds
            .iter()
            .map(|(p, b)| b * z.powi(*p as i32))
            .fold(0.0, |acc, v| acc + v)
    }

    /// `F(x)` at a single point.
    pub fn eval(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.dim);
        for t in self.tensors.values() {
            let args = vec![x; t.order];
            out += t.apply(&args);
        }
        out
    }

    /// `F_r[a_1, …, a_r]` applied node by node. Returns `None` when `F_r` is zero.
    pub fn apply_pointwise(&self, r: usize, args: &[&Trajectory]) -> Result<Option<Trajectory>> {
        let Some(t) = self.tensors.get(&r) else {
            return Ok(None);
        };
        if args.len() != r {
            return Err(Error::Arity {
                expected: r,
                found: args.len(),
            });
        }
        let grid = *args[0].grid();
        for a in args {
            if a.grid() != &grid {
                return Err(Error::GridMismatch);
            }
        }
        let values = (0..grid.len())
            .map(|k| {
                let at: Vec<_> = args.iter().map(|a| a.at(k)).collect();
                t.apply(&at)
            })
            .collect();
        Trajectory::from_values(grid, self.dim, values).map(Some)
    }
}

/// One element `(x0, f)` of the data space `ℝⁿ × L²`.
#[derive(Clone, Debug, PartialEq)]
pub struct SourceData {
    pub x0: DVector<f64>,
    pub f: Trajectory,
}

impl SourceData {
    pub fn new(x0: DVector<f64>, f: Trajectory) -> Self {
        Self { x0, f }
    }

    /// `|x0| + ‖f‖_L²`.
    pub fn norm(&self) -> f64 {
        self.x0.norm() + self.f.l2_norm()
    }
}

/// Tree-indexed data `u(b)`; trees outside the support are zero.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SeriesData {
    entries: BTreeMap<PlanarTree, SourceData>,
}

impl SeriesData {
    pub fn new() -> Self {
        Self::default()
    }

    /// Data supported on the leaf only.
    pub fn single(data: SourceData) -> Self {
        let mut s = Self::new();
        s.insert(PlanarTree::leaf(), data);
        s
    }

    pub fn insert(&mut self, tree: PlanarTree, data: SourceData) {
        self.entries.insert(tree, data);
    }

    pub fn get(&self, tree: &PlanarTree) -> Option<&SourceData> {
        self.entries.get(tree)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&PlanarTree, &SourceData)> {
        self.entries.iter()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `|u| = Σ_b |λ|^{|b|} ‖u(b)‖` over the support.
    pub fn norm(&self, lambda: f64) -> f64 {
        self.entries
            .iter()
            .map(|(b, d)| lambda.abs().powi(b.internal() as i32) * d.norm())
            .sum()
    }

    pub fn max_arity(&self) -> usize {
        self.entries.keys().map(PlanarTree::max_arity).max().unwrap_or(0)
    }
}

/// Evaluates `Φ(b)` and `Φ∗u` for one linear system, grid and nonlinearity.
#[derive(Clone, Debug)]
pub struct ButcherEngine {
    prop: Propagator,
    nonlinearity: PolynomialNonlinearity,
}

impl ButcherEngine {
    pub fn new(prop: Propagator, nonlinearity: PolynomialNonlinearity) -> Result<Self> {
        if nonlinearity.dim() != prop.system().state_dim() {
            return Err(Error::Dimension {
                context: "nonlinearity vs state",
                expected: prop.system().state_dim(),
                found: nonlinearity.dim(),
            });
        }
        Ok(Self { prop, nonlinearity })
    }

    pub fn propagator(&self) -> &Propagator {
        &self.prop
    }

    pub fn nonlinearity(&self) -> &PolynomialNonlinearity {
        &self.nonlinearity
    }

    fn zero_trajectory(&self) -> Trajectory {
        Trajectory::zeros(*self.prop.grid(), self.prop.system().state_dim())
    }

    /// Largest arity worth enumerating for data `u`: beyond it every term
    /// of `Φ∗u` vanishes.
    pub fn arity_cap(&self, u: &SeriesData) -> usize {
        self.nonlinearity.max_order().max(u.max_arity())
    }

    /// `Φ(b)(inputs)`, with one input per leaf of `b`.
    pub fn phi(&self, b: &PlanarTree, inputs: &[&SourceData]) -> Result<Trajectory> {
        if inputs.len() != b.leaves() {
            return Err(Error::Arity {
                expected: b.leaves(),
                found: inputs.len(),
            });
        }
        if b.is_leaf() {
            return self.prop.solve(&inputs[0].x0, &inputs[0].f);
        }
        let r = b.root_arity();
        if self.nonlinearity.tensor(r).is_none() {
            return Ok(self.zero_trajectory());
        }
        let mut parts = Vec::with_capacity(r);
        let mut offset = 0;
        for child in b.children() {
            let k = child.leaves();
            parts.push(self.phi(child, &inputs[offset..offset + k])?);
            offset += k;
        }
        let refs: Vec<_> = parts.iter().collect();
        match self.nonlinearity.apply_pointwise(r, &refs)? {
            Some(src) => self.prop.solve(&DVector::zeros(src.dim()), &src),
            None => Ok(self.zero_trajectory()),
        }
    }

    /// `(Φ∗u)(b)` as the literal sum over coproduct terms. Terms whose upper
    /// forest leaves the support of `u` contribute zero.
    pub fn phi_star_u(&self, b: &PlanarTree, u: &SeriesData) -> Result<Trajectory> {
        let mut acc = self.zero_trajectory();
        for ((upper, lower), coef) in b.coproduct().iter() {
            let inputs: Option<Vec<&SourceData>> = upper.trees().iter().map(|e| u.get(e)).collect();
            let Some(inputs) = inputs else { continue };
            let term = self.phi(lower, &inputs)?;
            acc.axpy(coef as f64, &term)?;
        }
        Ok(acc)
    }

    /// Memoized evaluator of `Φ∗u` for fixed data.
    pub fn evaluator(&self, u: SeriesData) -> SeriesEvaluator<'_> {
        SeriesEvaluator {
            engine: self,
            u,
            cache: RwLock::new(HashMap::new()),
        }
    }

    /// Truncated series `Σ_{N(b) ≤ n_max} λ^{|b|} (Φ∗u)(b)`.
    pub fn sum_series(&self, u: &SeriesData, lambda: f64, n_max: usize) -> Result<SeriesSolution> {
        let eval = self.evaluator(u.clone());
        let trees = enumerate_trees_with_max_arity(n_max.max(1), self.arity_cap(u));
        let mut x = self.zero_trajectory();
        let mut rows = Vec::with_capacity(trees.len());
        let top = trees.iter().map(PlanarTree::order).max().unwrap_or(1);
        let mut tail = 0.0;
        for b in trees {
            let term = eval.get(&b)?;
            let power = lambda.powi(b.internal() as i32);
            x.axpy(power, &term)?;
            let norm = term.s_norm();
            if b.order() == top {
                tail += power.abs() * norm;
            }
            rows.push(TreeContribution {
                encoding: b.encoding(),
                internal: b.internal(),
                leaves: b.leaves(),
                order: b.order(),
                s_norm: norm,
                lambda_power: power,
            });
        }
        Ok(SeriesSolution {
            x,
            rows,
            tail_estimate: tail,
        })
    }

    /// `x' - Ax - f - λF(x)` on the grid, with `x'` from fourth-order finite
    /// differences.
    pub fn residual(&self, x: &Trajectory, f: &Trajectory, lambda: f64) -> Result<Trajectory> {
        x.check_compatible(f)?;
        let dx = fd_derivative(x)?;
        let a = &self.prop.system().a;
        let values = (0..x.grid().len())
            .map(|k| {
                let xk = x.at(k);
                dx.at(k) - a * xk - f.at(k) - self.nonlinearity.eval(xk) * lambda
            })
            .collect();
        Trajectory::from_values(*x.grid(), x.dim(), values)
    }
}

/// Fourth-order finite-difference derivative on a uniform grid (needs M ≥ 4).
pub fn fd_derivative(x: &Trajectory) -> Result<Trajectory> {
    let m = x.grid().intervals();
    if m < 4 {
        return Err(Error::InvalidGrid(format!(
            "finite-difference derivative needs at least 4 intervals, got {m}"
        )));
    }
    let h = x.grid().step();
    let v = x.values();
    let comb = |c: [f64; 5], idx: [usize; 5]| -> DVector<f64> {
        let mut out = DVector::zeros(x.dim());
        for (ci, &i) in c.iter().zip(&idx) {
            out.axpy(*ci / (12.0 * h), &v[i], 1.0);
        }
        out
    };
    let values = (0..=m)
        .map(|k| match k {
            0 => comb([-25.0, 48.0, -36.0, 16.0, -3.0], [0, 1, 2, 3, 4]),
            1 => comb([-3.0, -10.0, 18.0, -6.0, 1.0], [0, 1, 2, 3, 4]),
            k if k == m => comb([25.0, -48.0, 36.0, -16.0, 3.0], [m, m - 1, m - 2, m - 3, m - 4]),
            k if k == m - 1 => comb([3.0, 10.0, -18.0, 6.0, -1.0], [m, m - 1, m - 2, m - 3, m - 4]),
            k => comb([1.0, -8.0, 0.0, 8.0, -1.0], [k - 2, k - 1, k, k + 1, k + 2]),
        })
        .collect();
    Trajectory::from_values(*x.grid(), x.dim(), values)
}

/// Caches `(Φ∗u)(b)` per tree. Uses `(Φ∗u)(b) = Φ(o)(u(b)) + Φ(o)(0, F_r[(Φ∗u)(b_1), …])`
/// for `B₋(b) = b_1•…•b_r`, which follows from `cop ∘ B₋ = (id ⊗ B₋) ∘ cop`
/// and lets every subtree be computed once.
pub struct SeriesEvaluator<'e> {
    engine: &'e ButcherEngine,
    u: SeriesData,
    cache: RwLock<HashMap<PlanarTree, Arc<Trajectory>>>,
}

impl<'e> SeriesEvaluator<'e> {
    pub fn data(&self) -> &SeriesData {
        &self.u
    }

    /// Adds `u(tree)`. Cached values that may depend on it are dropped.
    pub fn insert(&mut self, tree: PlanarTree, data: SourceData) {
        let grading = tree.internal();
        self.cache
            .get_mut()
            .expect("cache lock poisoned")
            .retain(|b, _| b.internal() < grading);
        self.u.insert(tree, data);
    }

    pub fn get(&self, b: &PlanarTree) -> Result<Arc<Trajectory>> {
        if let Some(hit) = self.cache.read().expect("cache lock poisoned").get(b) {
            return Ok(hit.clone());
        }
        let engine = self.engine;
        let mut out = match self.u.get(b) {
            Some(d) => engine.prop.solve(&d.x0, &d.f)?,
            None => engine.zero_trajectory(),
        };
        if let Some(g) = self.nonlinear_source(b)? {
            let extra = engine.prop.solve(&DVector::zeros(g.dim()), &g)?;
            out.axpy(1.0, &extra)?;
        }
        let out = Arc::new(out);
        self.cache
            .write()
            .expect("cache lock poisoned")
            .entry(b.clone())
            .or_insert_with(|| out.clone());
        Ok(out)
    }

    /// `F_r[(Φ∗u)(b_1), …, (Φ∗u)(b_r)]` for `B₋(b) = b_1•…•b_r`; `None` for
    /// the leaf or when `F_r = 0`.
    pub fn nonlinear_source(&self, b: &PlanarTree) -> Result<Option<Trajectory>> {
        if b.is_leaf() || self.engine.nonlinearity.tensor(b.root_arity()).is_none() {
            return Ok(None);
        }
        let parts = b
            .children()
            .iter()
            .map(|c| self.get(c))
            .collect::<Result<Vec<_>>>()?;
        let refs: Vec<&Trajectory> = parts.iter().map(|p| p.as_ref()).collect();
        self.engine.nonlinearity.apply_pointwise(b.root_arity(), &refs)
    }
}

/// Per-tree row of a series report.
#[derive(Clone, Debug, Serialize)]
pub struct TreeContribution {
    pub encoding: String,
    pub internal: usize,
    pub leaves: usize,
    pub order: usize,
    /// Solution-space norm of `(Φ∗u)(b)`.
    pub s_norm: f64,
    /// `λ^{|b|}`.
    pub lambda_power: f64,
}

#[derive(Clone, Debug)]
pub struct SeriesSolution {
    pub x: Trajectory,
    pub rows: Vec<TreeContribution>,
    /// `Σ |λ|^{|b|} ‖(Φ∗u)(b)‖` over the highest order level summed.
    pub tail_estimate: f64,
}

/// `C_Φ^{N(b)} · Π_{internal i} ‖F_{r_b(i)}‖`.
pub fn phi_norm_bound(b: &PlanarTree, phi_circ_bound: f64, nonlinearity: &PolynomialNonlinearity) -> f64 {
    b.internal_arities()
        .into_iter()
        .map(|r| nonlinearity.norm_bound(r))
        .product::<f64>()
        * phi_circ_bound.powi(b.order() as i32)
}

/// Sufficient condition for absolute convergence of the tree series:
/// `|λ| |u|⁻¹ |F|(16 C_Φ |u|) < 1`.
#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceCertificate {
    pub lambda: f64,
    pub u_norm: f64,
    pub phi_circ_norm_bound: f64,
    pub a_norm: f64,
    pub norm_bounds: Vec<(usize, f64)>,
    pub majorant_value: f64,
    pub condition_value: f64,
    pub satisfied: bool,
}

pub fn convergence_certificate(
    u: &SeriesData,
    lambda: f64,
    sys: &LinearSystem,
    nonlinearity: &PolynomialNonlinearity,
) -> ConvergenceCertificate {
    let u_norm = u.norm(lambda);
    let c_phi = solution_operator_bound(sys);
    let (majorant_value, condition_value) = if u_norm == 0.0 {
        (0.0, 0.0)
    } else {
        let maj = nonlinearity.majorant(TREE_COUNT_BASE * c_phi * u_norm);
        (maj, lambda.abs() * maj / u_norm)
    };
    ConvergenceCertificate {
        lambda,
        u_norm,
        phi_circ_norm_bound: c_phi,
        a_norm: spectral_norm(&sys.a),
        norm_bounds: nonlinearity.norm_bounds(),
        majorant_value,
        condition_value,
        satisfied: condition_value < 1.0,
    }
}
