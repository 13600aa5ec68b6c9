use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error)]
pub enum EcdError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix contains a non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("matrix is not Hermitian (relative residual {residual:.3e})")]
    NotHermitian { residual: f64 },

    #[error("numerical routine failed to converge (residual {residual:.3e})")]
    SolverFailure { residual: f64 },

    #[error("dimension {dim} exceeds the dimension budget {budget}")]
    Capacity { dim: usize, budget: usize },

    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("invalid channel: {0}")]
    InvalidChannel(String),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, EcdError>;
