use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not Hermitian: max |H_ij - conj(H_ji)| = {deviation:e}")]
    NotHermitian { deviation: f64 },

    #[error("eigensolver did not converge for a {dim}x{dim} matrix")]
    NoConvergence { dim: usize },

    #[error("matrix is singular or numerically singular ({0})")]
    Singular(String),

    #[error("operator norm {norm} exceeds the allowed bound {bound}")]
    NormTooLarge { norm: f64, bound: f64 },

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("state is not normalized: norm = {norm}")]
    NotNormalized { norm: f64 },

    #[error("{lambda} is not an eigenvalue (nearest eigenvalue {nearest})")]
    NotAnEigenvalue { lambda: f64, nearest: f64 },

    #[error("the filtered state has zero norm (success probability {probability:e})")]
    FilteredToZero { probability: f64 },

    #[error("postselection at step {step} has zero probability")]
    ZeroProbability { step: usize },

    #[error("explicit dilation of dimension {dim} exceeds the limit {limit}; use abstract mode")]
    SizeGuard { dim: usize, limit: usize },

    #[error("minimax oracle failed: {0}")]
    Minimax(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("retry cap of {cap} attempts reached without success")]
    RetryCap { cap: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
