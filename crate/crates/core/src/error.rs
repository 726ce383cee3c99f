use thiserror::Error;

use crate::tree::PlanarTree;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("a vertex needs at least 2 children, got {0}")]
    DegenerateVertex(usize),

    #[error("B- of the leaf is the zero element")]
    LeafHasNoSubtrees,

    #[error("arity mismatch: expected {expected} inputs, found {found}")]
    Arity { expected: usize, found: usize },

    #[error("invalid tree encoding {input:?}: {reason}")]
    Encoding { input: String, reason: String },

    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    Dimension {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("trajectories live on different time grids")]
    GridMismatch,

    #[error("invalid time grid: {0}")]
    InvalidGrid(String),

    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("invalid nonlinearity: {0}")]
    Nonlinearity(String),

    #[error(
        "linearized system not controllable: Kalman rank condition rank(B, AB, ..., A^(n-1)B) = n \
         fails (rank {rank} < n = {n}, smallest Gramian eigenvalue {c_t:e})"
    )]
    NotControllable { rank: usize, n: usize, c_t: f64 },

    #[error("tree {0} requires the control of {1}, which has not been computed")]
    MissingDependency(PlanarTree, PlanarTree),

    #[error("verification integrator diverged at t = {t}")]
    Diverged { t: f64 },

    #[error("problem file: field `{field}`: {message}")]
    Problem { field: String, message: String },

    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),

    #[error("malformed table at line {line}: {message}")]
    Table { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn problem(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Problem {
            field: field.into(),
            message: message.into(),
        }
    }
}
