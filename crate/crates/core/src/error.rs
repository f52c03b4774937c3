use thiserror::Error;

/// Errors produced by model construction, decompositions and experiment runs.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Validation(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("eigensolver did not converge after {matvecs} matrix-vector products (worst residual {residual:e})")]
    NoConvergence { matvecs: usize, residual: f64 },

    #[error("eigenvalue gap is zero")]
    ZeroGap,

    #[error("ambiguous eigenspace correspondence: {0}")]
    Correspondence(String),

    #[error("residual check failed: {0}")]
    Residual(String),

    #[error("model matrix of size {n_vertices} exceeds the materialization cap {cap}")]
    TooLarge { n_vertices: usize, cap: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    /// Process exit code used by the command line front end: 3 for solver
    /// non-convergence, 2 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NoConvergence { .. } => 3,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
