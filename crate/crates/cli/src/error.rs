use std::path::PathBuf;

use thiserror::Error;

/// Failures of a command, each mapped to a documented exit status.
#[derive(Debug, Error)]
pub enum CliError {
    /// Malformed or inconsistent configuration (exit status 3).
    #[error("configuration error: {0}")]
    Config(String),

    /// The model rejected a parameter (exit status 3).
    #[error("invalid parameter: {0}")]
    Invalid(siqrng_core::Error),

    /// A quantity could not be evaluated at the requested point (exit status 4).
    #[error("numerical failure: {0}")]
    Numerical(siqrng_core::Error),

    /// Reading or writing a file failed (exit status 5).
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Invalid(_) => 3,
            CliError::Numerical(_) => 4,
            CliError::Io { .. } => 5,
        }
    }

    pub fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> CliError {
        let path = path.into();
        move |source| CliError::Io { path, source }
    }
}

impl From<siqrng_core::Error> for CliError {
    fn from(e: siqrng_core::Error) -> Self {
        use siqrng_core::Error as E;
        match e {
            E::Degenerate(_) | E::Infeasible { .. } | E::Empty(_) => CliError::Numerical(e),
            _ => CliError::Invalid(e),
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io {
            path: PathBuf::from("<csv>"),
            source: std::io::Error::other(e.to_string()),
        }
    }
}
