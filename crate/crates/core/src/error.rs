use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("mesh validation failed: {0}")]
    Validation(String),

    #[error("assembly error: {0}")]
    Assembly(String),

    #[error("linear solver failed: {0}")]
    Solver(String),

    #[error("nonlinear iteration did not converge after {iterations} iterations (last residual {last_residual:e})")]
    NonConvergence {
        iterations: usize,
        last_residual: f64,
        history: Vec<f64>,
    },

    #[error("level set has no interface crossings")]
    NoInterface,

    #[error("degenerate crossing at {position:?}: {message}")]
    DegenerateCrossing { position: [f64; 2], message: String },

    #[error("level-set gradient vanishes at node {node}")]
    DegenerateGradient { node: usize },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
