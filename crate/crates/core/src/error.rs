use thiserror::Error;

/// Errors raised by the numerical core and the experiment runner.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("incompatible spaces: {0}")]
    SpaceMismatch(String),

    #[error("singular tridiagonal system (zero pivot at row {row})")]
    SingularSystem { row: usize },

    #[error("projection did not converge after {iterations} iterations (residual {residual:e})")]
    NotConverged {
        iterations: usize,
        residual: f64,
        last_iterate: Vec<f64>,
    },

    #[error("empty point cloud")]
    EmptyCloud,

    #[error("infeasible selection at step {step}: {detail}")]
    InfeasibleSelection { step: usize, detail: String },

    #[error("{check} violated: {detail}")]
    Violation { check: String, detail: String },

    #[error("config error at line {line}: {msg}")]
    Config { line: usize, msg: String },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
