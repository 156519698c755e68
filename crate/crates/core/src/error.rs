use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid graph spec: {0}")]
    InvalidSpec(String),

    #[error("invalid block measure: {0}")]
    InvalidMeasure(String),

    #[error("invalid word: {0}")]
    InvalidWord(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("resource limit exceeded: {0}")]
    Resource(String),

    #[error("ambiguous resolvent branch at z = {re} + {im}i: roots {roots:?}")]
    NumericalBranch {
        re: f64,
        im: f64,
        roots: Vec<(f64, f64)>,
    },

    #[error("invalid cdf: {0}")]
    InvalidCdf(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("config error at `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("acceptance check failed: {0}")]
    Check(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
