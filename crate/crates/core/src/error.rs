use thiserror::Error;

/// Errors produced by the shapeflow core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("grid resolution too coarse: {0}")]
    Resolution(String),

    #[error("empty domain")]
    EmptyDomain,

    #[error("solver did not converge after {iterations} iterations (residual {residual:.3e})")]
    Convergence { iterations: usize, residual: f64 },

    #[error("volume mismatch: {left} cells vs {right} cells")]
    VolumeMismatch { left: usize, right: usize },

    /// A guaranteed property (monotonicity, volume conservation) failed at runtime.
    #[error("property violated: {0}")]
    PropertyViolation(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
