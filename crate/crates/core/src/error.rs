use thiserror::Error;

/// Errors raised by ingestion, fitting, testing and simulation.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("empty input")]
    EmptyInput,

    #[error("insufficient data: need at least {needed} values, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("degenerate data: {0}")]
    Degenerate(String),

    #[error("insufficient tail: {0}")]
    InsufficientTail(String),

    #[error("optimum alpha = {alpha} lies on the search bracket edge ({lower}, {upper}]")]
    AlphaAtBracketEdge { alpha: f64, lower: f64, upper: f64 },

    #[error("no convergence after {iterations} iterations (last estimate {last}, step {step})")]
    NonConvergence {
        iterations: usize,
        last: f64,
        step: f64,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
