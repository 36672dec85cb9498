use thiserror::Error;

/// Errors raised by the frame, estimator and experiment layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("aliasing: a grid of {grid} points cannot resolve frequencies up to |k| = {k_max}")]
    Aliasing { grid: usize, k_max: usize },

    #[error("grid mismatch: {0} points vs {1} points")]
    GridMismatch(usize, usize),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("missing coefficients for level {0}")]
    MissingCoefficients(i32),

    #[error("reference resolution insufficient: {0}")]
    ReferenceResolution(String),

    #[error("empty sample set")]
    EmptySample,

    #[error("config: {0}")]
    Config(String),

    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
