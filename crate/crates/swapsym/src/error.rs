use thiserror::Error;

/// Unified error type for model validation, analytic checks and Monte-Carlo
/// drivers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix not positive semidefinite: {0}")]
    NotPsd(String),

    #[error("invalid jump measure: {0}")]
    InvalidMeasure(String),

    #[error("invalid market: {0}")]
    InvalidMarket(String),

    #[error("invalid contract: {0}")]
    InvalidContract(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite value encountered in {0}")]
    NonFinite(String),

    #[error("degenerate configuration: {0}")]
    Degenerate(String),

    #[error("no root found in [{lo}, {hi}]")]
    NoRoot { lo: f64, hi: f64 },

    #[error("multiple roots found: {candidates:?}")]
    MultipleRoots { candidates: Vec<f64> },

    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),
}

pub type Result<T> = std::result::Result<T, Error>;
