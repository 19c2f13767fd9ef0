use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("argument outside the function domain: {0}")]
    Domain(f64),

    #[error("dimension mismatch: expected {expected:?}, found {found:?}")]
    Dimension {
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("cell ({i}, {j}) out of bounds for a {p}x{q} matrix")]
    Index { i: usize, j: usize, p: usize, q: usize },

    #[error("covariance is ill-conditioned; Cholesky failed at jitter levels {jitters:?}")]
    IllConditionedCovariance { jitters: Vec<f64> },

    #[error("covariance is not symmetric positive definite: {0}")]
    Covariance(String),

    #[error("Gram matrix Y^T Y is singular")]
    SingularGram,

    #[error("no observed entries")]
    EmptyObservations,

    #[error("protocol violation: {0}")]
    Protocol(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("format error on line {line}: {message}")]
    Format { line: usize, message: String },

    #[error("input contains no data")]
    EmptyData,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
