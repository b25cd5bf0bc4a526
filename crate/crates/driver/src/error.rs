use thiserror::Error;

/// Failures of a driver run, grouped by exit status.
#[derive(Debug, Error)]
pub enum DriverError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("step {step}: {source}")]
    Numerical {
        step: usize,
        #[source]
        source: stefanst_core::Error,
    },

    #[error("{0}")]
    Core(#[from] stefanst_core::Error),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl DriverError {
    pub fn config(msg: impl Into<String>) -> Self {
        DriverError::Config(msg.into())
    }

    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        DriverError::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// 1 for configuration and i/o problems, 2 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            DriverError::Config(_) | DriverError::Io { .. } => 1,
            DriverError::Numerical { .. } | DriverError::Core(_) => 2,
        }
    }

    /// Residual history of a nonconvergent nonlinear solve, if any.
    pub fn residual_history(&self) -> Option<&[f64]> {
        match self {
            DriverError::Numerical {
                source: stefanst_core::Error::NonConvergence { history, .. },
                ..
            }
            | DriverError::Core(stefanst_core::Error::NonConvergence { history, .. }) => {
                Some(history)
            }
            _ => None,
        }
    }
}

pub type Result<T, E = DriverError> = std::result::Result<T, E>;
