use thiserror::Error;

/// Crate-wide error type. Numerical routines fail loudly rather than
/// returning poisoned values.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: String,
        expected: String,
        got: String,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("matrix is not symmetric (max asymmetry {max_asymmetry:.3e} at ({row},{col}))")]
    NotSymmetric {
        row: usize,
        col: usize,
        max_asymmetry: f64,
    },

    #[error("matrix is not positive definite (pivot {pivot:.3e} at row {row})")]
    NotPositiveDefinite { row: usize, pivot: f64 },

    #[error("index range overflow: {0}")]
    IndexOverflow(String),

    #[error("matrix is singular (pivot column {0})")]
    Singular(usize),

    #[error("iteration failed to converge: {0}")]
    NoConvergence(String),

    #[error("unsupported mode: {0}")]
    UnsupportedMode(String),

    #[error("order {order} exceeds the dense-analysis guard ({limit})")]
    OrderGuard { order: usize, limit: usize },

    #[error("inner solve failed: {0}")]
    InnerSolve(String),

    #[error("retries exhausted: {0}")]
    RetriesExhausted(String),

    #[error("numerical sanity check failed: {0}")]
    Numerical(String),

    #[error("malformed matrix market data: {0}")]
    MatrixMarket(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn dims(context: impl ToString, expected: impl ToString, got: impl ToString) -> Self {
        Error::DimensionMismatch {
            context: context.to_string(),
            expected: expected.to_string(),
            got: got.to_string(),
        }
    }
}
