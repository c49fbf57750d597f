use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("cannot mix exact and floating scalars")]
    ModeMismatch,
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("{what} exceeds cap {cap}")]
    CapExceeded { what: String, cap: usize },
    #[error("matrix is singular")]
    Singular,
    #[error("no convergence: {0}")]
    NoConvergence(String),
    #[error("necessary condition failed: {0}")]
    NecessaryCondition(String),
    #[error("precision exhausted: {0}")]
    PrecisionExhausted(String),
    #[error("internal check failed: {0}")]
    CheckFailed(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

