//! Problem files, trajectory tables and the commands behind the binary.
//!
//! A problem is one JSON document:
//!
//! ```json
//! {
//!   "n": 1, "m": 1, "T": 1.0, "lambda": 0.1,
//!   "A": [[0.0]], "B": [[1.0]], "x0": [1.0],
//!   "tensors": [{ "order": 2, "entries": [{ "out": 0, "inputs": [0, 0], "value": 1.0 }] }],
//!   "grid_points": 200, "n_max": 7
//! }
//! ```
//!
//! Matrices are row-major, either nested or flat. `B` may be omitted when
//! `m = 0`. Trajectories are written as CSV with a `t` column followed by one
//! column per component, every number with 17 significant digits.

use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::control::{
    minimize_j_circ, synthesize, verify_control, ControlCertificate, ControlProblem, Tolerances,
};
use crate::error::{Error, Result};
use crate::linear::{kalman_rank_with_tol, LinearSystem, Propagator, TimeGrid, Trajectory};
use crate::series::{
    convergence_certificate, ButcherEngine, ConvergenceCertificate, MultilinearTensor, PolynomialNonlinearity,
    SeriesData, SourceData, TreeContribution,
};
use crate::tree::{enumerate_trees, PlanarTree};

pub const EXIT_OK: i32 = 0;
pub const EXIT_OTHER: i32 = 1;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_KALMAN: i32 = 3;
pub const EXIT_VERIFICATION: i32 = 4;

pub const DEFAULT_GRID_POINTS: usize = 200;
pub const DEFAULT_N_MAX: usize = 7;

/// Exit status for a failed command.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Json(_) | Error::Problem { .. } | Error::Table { .. } | Error::Encoding { .. } => EXIT_PARSE,
        Error::NotControllable { .. } => EXIT_KALMAN,
        Error::Diverged { .. } => EXIT_VERIFICATION,
        _ => EXIT_OTHER,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixSpec {
    Rows(Vec<Vec<f64>>),
    Flat(Vec<f64>),
}

impl MatrixSpec {
    fn to_matrix(&self, field: &str, rows: usize, cols: usize) -> Result<DMatrix<f64>> {
        let flat: Vec<f64> = match self {
            MatrixSpec::Flat(v) => v.clone(),
            MatrixSpec::Rows(r) => {
                if r.len() != rows {
                    return Err(Error::problem(field, format!("expected {rows} rows, found {}", r.len())));
                }
                if let Some((i, row)) = r.iter().enumerate().find(|(_, row)| row.len() != cols) {
                    return Err(Error::problem(
                        format!("{field}[{i}]"),
                        format!("expected {cols} columns, found {}", row.len()),
                    ));
                }
                r.concat()
            }
        };
        if flat.len() != rows * cols {
            return Err(Error::problem(
                field,
                format!("expected {rows}x{cols} = {} entries, found {}", rows * cols, flat.len()),
            ));
        }
        check_finite(field, &flat)?;
        Ok(DMatrix::from_row_slice(rows, cols, &flat))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntrySpec {
    pub out: usize,
    pub inputs: Vec<usize>,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TensorSpec {
    pub order: usize,
    #[serde(default)]
    pub entries: Vec<EntrySpec>,
    /// Replaces the computed `√T ‖F_p‖_F`; must not be smaller.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub norm_bound: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rank: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observability: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verification: Option<f64>,
}

impl ToleranceOverrides {
    pub fn resolve(&self) -> Tolerances {
        let d = Tolerances::default();
        Tolerances {
            rank: self.rank.unwrap_or(d.rank),
            observability: self.observability.unwrap_or(d.observability),
            verification: self.verification.unwrap_or(d.verification),
        }
    }
}

fn default_grid_points() -> usize {
    DEFAULT_GRID_POINTS
}

fn default_n_max() -> usize {
    DEFAULT_N_MAX
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub n: usize,
    #[serde(default)]
    pub m: usize,
    #[serde(rename = "T")]
    pub t_final: f64,
    #[serde(default)]
    pub lambda: f64,
    #[serde(rename = "A")]
    pub a: MatrixSpec,
    #[serde(rename = "B", default, skip_serializing_if = "Option::is_none")]
    pub b: Option<MatrixSpec>,
    pub x0: Vec<f64>,
    #[serde(default)]
    pub tensors: Vec<TensorSpec>,
    /// Number of grid intervals `M` (even).
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
    #[serde(default = "default_n_max")]
    pub n_max: usize,
    #[serde(default)]
    pub tolerances: ToleranceOverrides,
}

fn check_finite(field: &str, values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(Error::problem(format!("{field}[{i}]"), "not a finite number")),
        None => Ok(()),
    }
}

impl ProblemFile {
    pub fn from_json(text: &str) -> Result<Self> {
        let p: ProblemFile = serde_json::from_str(text)?;
        p.validate()?;
        Ok(p)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("problem files always serialize")
    }

    /// Checks everything the typed constructors would reject, naming the field.
    pub fn validate(&self) -> Result<()> {
        self.system()?;
        self.initial_state()?;
        self.nonlinearity()?;
        self.grid()?;
        if self.n_max == 0 {
            return Err(Error::problem("n_max", "must be at least 1"));
        }
        if !self.lambda.is_finite() {
            return Err(Error::problem("lambda", "not a finite number"));
        }
        let t = self.tolerances.resolve();
        for (field, v) in [
            ("tolerances.rank", t.rank),
            ("tolerances.observability", t.observability),
            ("tolerances.verification", t.verification),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::problem(field, "must be positive"));
            }
        }
        Ok(())
    }

    pub fn system(&self) -> Result<LinearSystem> {
        if self.n == 0 {
            return Err(Error::problem("n", "must be positive"));
        }
        if !(self.t_final.is_finite() && self.t_final > 0.0) {
            return Err(Error::problem("T", "must be positive"));
        }
        let a = self.a.to_matrix("A", self.n, self.n)?;
        let b = match (&self.b, self.m) {
            (Some(b), m) => b.to_matrix("B", self.n, m)?,
            (None, 0) => DMatrix::zeros(self.n, 0),
            (None, _) => return Err(Error::problem("B", "missing, required when m > 0")),
        };
        LinearSystem::new(a, b, self.t_final)
    }

    pub fn initial_state(&self) -> Result<DVector<f64>> {
        if self.x0.len() != self.n {
            return Err(Error::problem(
                "x0",
                format!("expected {} entries, found {}", self.n, self.x0.len()),
            ));
        }
        check_finite("x0", &self.x0)?;
        Ok(DVector::from_column_slice(&self.x0))
    }

    pub fn nonlinearity(&self) -> Result<PolynomialNonlinearity> {
        let mut nl = PolynomialNonlinearity::zero(self.n, self.t_final);
        for (i, spec) in self.tensors.iter().enumerate() {
            let field = format!("tensors[{i}]");
            let mut tensor =
                MultilinearTensor::new(spec.order, self.n).map_err(|e| Error::problem(format!("{field}.order"), e.to_string()))?;
            for (j, e) in spec.entries.iter().enumerate() {
                let efield = format!("{field}.entries[{j}]");
                if !e.value.is_finite() {
                    return Err(Error::problem(format!("{efield}.value"), "not a finite number"));
                }
                tensor
                    .add_entry(e.out, &e.inputs, e.value)
                    .map_err(|err| Error::problem(efield, err.to_string()))?;
            }
            nl.insert(tensor).map_err(|e| Error::problem(format!("{field}.order"), e.to_string()))?;
            if let Some(bound) = spec.norm_bound {
                nl = nl
                    .with_norm_bound(spec.order, bound)
                    .map_err(|e| Error::problem(format!("{field}.norm_bound"), e.to_string()))?;
            }
        }
        Ok(nl)
    }

    pub fn grid(&self) -> Result<TimeGrid> {
        TimeGrid::new(self.t_final, self.grid_points).map_err(|e| Error::problem("grid_points", e.to_string()))
    }

    pub fn control_problem(&self) -> Result<ControlProblem> {
        Ok(ControlProblem::new(
            self.system()?,
            self.nonlinearity()?,
            self.initial_state()?,
            self.lambda,
            self.grid()?,
            self.n_max,
        )?
        .with_tolerances(self.tolerances.resolve()))
    }
}

/// Writes `t, <prefix>_1, …, <prefix>_d`, one row per grid node.
pub fn trajectory_to_csv(traj: &Trajectory, prefix: &str) -> String {
    let mut out = String::from("t");
    for i in 1..=traj.dim() {
        let _ = write!(out, ",{prefix}_{i}");
    }
    out.push('\n');
    for (t, v) in traj.grid().nodes().zip(traj.values()) {
        let _ = write!(out, "{t:.16e}");
        for x in v.iter() {
            let _ = write!(out, ",{x:.16e}");
        }
        out.push('\n');
    }
    out
}

pub fn write_trajectory_csv(path: impl AsRef<Path>, traj: &Trajectory, prefix: &str) -> Result<()> {
    Ok(std::fs::write(path, trajectory_to_csv(traj, prefix))?)
}

/// Parses a table written by [`trajectory_to_csv`]. The time column must be
/// a uniform grid starting at 0 with an even number of intervals.
pub fn trajectory_from_csv(text: &str) -> Result<Trajectory> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or(Error::Table {
        line: 1,
        message: "empty table".into(),
    })?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    if cols.first() != Some(&"t") || cols.len() < 2 {
        return Err(Error::Table {
            line: 1,
            message: "header must be `t` followed by at least one component".into(),
        });
    }
    let dim = cols.len() - 1;
    let mut times = Vec::new();
    let mut values = Vec::new();
    for (i, line) in lines {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != dim + 1 {
            return Err(Error::Table {
                line: i + 1,
                message: format!("expected {} columns, found {}", dim + 1, fields.len()),
            });
        }
        let nums = fields
            .iter()
            .map(|f| f.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Table {
                line: i + 1,
                message: e.to_string(),
            })?;
        times.push(nums[0]);
        values.push(DVector::from_column_slice(&nums[1..]));
    }
    let intervals = times.len().saturating_sub(1);
    let t_final = *times.last().unwrap_or(&0.0);
    let grid = TimeGrid::new(t_final, intervals).map_err(|e| Error::Table {
        line: 2,
        message: e.to_string(),
    })?;
    for (k, &t) in times.iter().enumerate() {
        if (t - grid.node(k)).abs() > 1e-12 * t_final.max(1.0) {
            return Err(Error::Table {
                line: k + 2,
                message: format!("time {t} is off the uniform grid (expected {})", grid.node(k)),
            });
        }
    }
    Trajectory::from_values(grid, dim, values)
}

pub fn read_trajectory_csv(path: impl AsRef<Path>) -> Result<Trajectory> {
    trajectory_from_csv(&std::fs::read_to_string(path)?)
}

#[derive(Clone, Debug, Serialize)]
pub struct CoproductTerm {
    pub coefficient: i64,
    pub forest: String,
    pub tree: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct TreeRow {
    pub encoding: String,
    pub leaves: usize,
    pub internal: usize,
    pub order: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coproduct: Option<Vec<CoproductTerm>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct TreesReport {
    pub n_max: usize,
    pub count: usize,
    pub trees: Vec<TreeRow>,
}

pub fn tree_row(b: &PlanarTree, with_coproduct: bool) -> TreeRow {
    TreeRow {
        encoding: b.encoding(),
        leaves: b.leaves(),
        internal: b.internal(),
        order: b.order(),
        coproduct: with_coproduct.then(|| {
            b.coproduct()
                .iter()
                .map(|((forest, tree), c)| CoproductTerm {
                    coefficient: c,
                    forest: forest.to_string(),
                    tree: tree.encoding(),
                })
                .collect()
        }),
    }
}

pub fn cmd_trees(n_max: usize, with_coproduct: bool) -> Result<TreesReport> {
    if n_max == 0 {
        return Err(Error::problem("n_max", "must be at least 1"));
    }
    let trees: Vec<TreeRow> = enumerate_trees(n_max).iter().map(|b| tree_row(b, with_coproduct)).collect();
    Ok(TreesReport {
        n_max,
        count: trees.len(),
        trees,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct SolveReport {
    pub problem: ProblemFile,
    pub source: String,
    pub trees: Vec<TreeContribution>,
    /// Mass of the last included level, `Σ_{N(b) = n_max} |λ|^{|b|} ‖(Φ∗u)(b)‖_S`.
    pub tail_estimate: f64,
    pub residual_s_norm: f64,
    pub residual_sup_norm: f64,
    pub certificate: ConvergenceCertificate,
    pub warnings: Vec<String>,
    pub elapsed_ms: f64,
}

pub struct SolveOutput {
    pub report: SolveReport,
    pub state: Trajectory,
}

/// Sums the series with `u(o) = (x0, f)`; `source = None` means `f = 0`.
pub fn cmd_solve(problem: &ProblemFile, source: Option<&Trajectory>) -> Result<SolveOutput> {
    let start = Instant::now();
    let sys = problem.system()?;
    let grid = problem.grid()?;
    let nl = problem.nonlinearity()?;
    let x0 = problem.initial_state()?;
    let f = match source {
        Some(f) => {
            if f.grid() != &grid {
                return Err(Error::problem(
                    "source",
                    format!(
                        "table grid (T = {}, M = {}) differs from the problem grid (T = {}, M = {})",
                        f.grid().t_final(),
                        f.grid().intervals(),
                        grid.t_final(),
                        grid.intervals()
                    ),
                ));
            }
            if f.dim() != problem.n {
                return Err(Error::problem(
                    "source",
                    format!("expected {} components, found {}", problem.n, f.dim()),
                ));
            }
            f.clone()
        }
        None => Trajectory::zeros(grid, problem.n),
    };
    let engine = ButcherEngine::new(Propagator::new(&sys, grid)?, nl.clone())?;
    let u = SeriesData::single(SourceData::new(x0, f.clone()));
    let solution = engine.sum_series(&u, problem.lambda, problem.n_max)?;
    let residual = engine.residual(&solution.x, &f, problem.lambda)?;
    let certificate = convergence_certificate(&u, problem.lambda, &sys, &nl);
    let mut warnings = Vec::new();
    if !certificate.satisfied {
        warnings.push(format!(
            "convergence condition not certified: value {:.6e} >= 1",
            certificate.condition_value
        ));
    }
    let report = SolveReport {
        problem: problem.clone(),
        source: if source.is_some() { "table" } else { "zero" }.into(),
        trees: solution.rows,
        tail_estimate: solution.tail_estimate,
        residual_s_norm: residual.s_norm(),
        residual_sup_norm: residual.sup_norm(),
        certificate,
        warnings,
        elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
    };
    Ok(SolveOutput {
        report,
        state: solution.x,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct GramianSummary {
    pub c_t: f64,
    pub alpha: f64,
    pub beta: Option<f64>,
    pub b_norm: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ControlRow {
    pub encoding: String,
    pub internal: usize,
    pub y0_min: Vec<f64>,
    pub v_l2_norm: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ControlReport {
    pub problem: ProblemFile,
    pub kalman_rank: usize,
    pub gramian: GramianSummary,
    pub trees: Vec<ControlRow>,
    pub control_certificate: ControlCertificate,
    /// Convergence condition evaluated at the synthesized data `u`.
    pub series_certificate: ConvergenceCertificate,
    pub terminal_norm: f64,
    pub verification_tolerance: f64,
    pub verified: bool,
    pub elapsed_ms: f64,
}

pub struct ControlOutput {
    pub report: ControlReport,
    pub control: Trajectory,
    pub state: Trajectory,
}

pub fn cmd_control(problem: &ProblemFile) -> Result<ControlOutput> {
    let start = Instant::now();
    let prob = problem.control_problem()?;
    let synthesis = synthesize(&prob)?;
    let verification = verify_control(&prob, &synthesis.control)?;
    let mut u = SeriesData::new();
    for tc in &synthesis.tree_controls {
        u.insert(tc.tree.clone(), tc.u.clone());
    }
    let series_certificate = convergence_certificate(&u, prob.lambda, &prob.sys, &prob.nonlinearity);
    let trees = synthesis
        .tree_controls
        .iter()
        .map(|tc| ControlRow {
            encoding: tc.tree.encoding(),
            internal: tc.tree.internal(),
            y0_min: tc.y0_min.iter().copied().collect(),
            v_l2_norm: tc.v.l2_norm(),
        })
        .collect();
    let g = &synthesis.gramian;
    let report = ControlReport {
        problem: problem.clone(),
        kalman_rank: synthesis.kalman_rank,
        gramian: GramianSummary {
            c_t: g.c_t,
            alpha: g.alpha,
            beta: g.beta,
            b_norm: g.b_norm,
        },
        trees,
        control_certificate: synthesis.certificate.clone(),
        series_certificate,
        terminal_norm: verification.terminal_norm,
        verification_tolerance: prob.tolerances.verification,
        verified: verification.terminal_norm <= prob.tolerances.verification,
        elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
    };
    Ok(ControlOutput {
        report,
        control: synthesis.control,
        state: verification.x,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct CertifyReport {
    pub problem: ProblemFile,
    pub kalman_rank: usize,
    pub gramian: GramianSummary,
    pub control_certificate: ControlCertificate,
    pub elapsed_ms: f64,
}

/// Certificate quantities only; needs just the leaf control.
pub fn cmd_certify(problem: &ProblemFile) -> Result<CertifyReport> {
    let start = Instant::now();
    let prob = problem.control_problem()?;
    let circ = minimize_j_circ(&prob)?;
    let control_certificate = crate::control::control_certificate(&prob, std::slice::from_ref(&circ))?;
    let g = Propagator::new(&prob.sys, prob.grid)?.gramian();
    Ok(CertifyReport {
        problem: problem.clone(),
        kalman_rank: kalman_rank_with_tol(&prob.sys, prob.tolerances.rank),
        gramian: GramianSummary {
            c_t: g.c_t,
            alpha: g.alpha,
            beta: g.beta,
            b_norm: g.b_norm,
        },
        control_certificate,
        elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}

/// Pretty JSON with the timing field zeroed, for byte-level comparisons.
pub fn without_timing<T: Serialize>(report: &T) -> Result<String> {
    let mut v = serde_json::to_value(report)?;
    if let Some(obj) = v.as_object_mut() {
        obj.remove("elapsed_ms");
    }
    Ok(serde_json::to_string_pretty(&v)?)
}
