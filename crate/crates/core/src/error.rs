use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("resolution overflow: level {level} exceeds the maximum of {max}")]
    ResolutionOverflow { level: u64, max: u64 },

    #[error("vertex index {index} out of range for level {level}")]
    IndexOutOfRange { level: u32, index: u64 },

    #[error("value {value} outside the domain {domain}")]
    Domain { value: f64, domain: &'static str },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("tolerance {tol:e} unreachable within resolution {max_resolution}; capacity bracket [{lo}, {hi}]")]
    ToleranceUnreachable {
        tol: f64,
        max_resolution: u64,
        lo: f64,
        hi: f64,
    },

    #[error("ill-conditioned oracle system: {0}")]
    IllConditioned(String),

    #[error("solver did not converge after {iterations} iterations (relative residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("plate arc at level {level} is not aligned with {angular} angular cells")]
    MisalignedArc { level: u64, angular: usize },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
