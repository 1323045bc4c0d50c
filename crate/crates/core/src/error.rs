use thiserror::Error;

pub type Result<T> = std::result::Result<T, RipError>;

#[derive(Debug, Error)]
pub enum RipError {
    /// A parameter lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("index {index} out of range 0..{range}")]
    Index { index: usize, range: usize },

    #[error("shape mismatch: {0}")]
    Shape(String),

    /// Zero matrix, zero vector, empty support and similar.
    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("eigensolver failed: {reason} (reconstruction residual {residual:e})")]
    Spectral { reason: String, residual: f64 },

    /// Some k columns are numerically dependent, so no finite D exists.
    #[error("not RIP: {what} {value:e} is below tolerance {tol:e} on support {support:?}")]
    NotRip {
        what: &'static str,
        value: f64,
        tol: f64,
        support: Vec<usize>,
    },

    #[error("support enumeration needs {needed} subsets, cap is {cap}")]
    Budget { needed: u128, cap: u128 },

    #[error("matrix has trivial kernel (rank {rank} = n)")]
    NoKernel { rank: usize },

    #[error("vacuous parameters: {0}")]
    Vacuous(String),

    /// A proved inequality failed. This always indicates an implementation bug.
    #[error("theorem violation: {0}")]
    TheoremViolation(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl RipError {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        RipError::Domain(msg.into())
    }

    pub(crate) fn degenerate(msg: impl Into<String>) -> Self {
        RipError::Degenerate(msg.into())
    }
}
