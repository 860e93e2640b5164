use std::path::PathBuf;

use crate::est::Estimate;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Inputs outside an operation's domain (too few observations, node outside the room, ...).
    #[error("{0}")]
    Domain(String),

    /// No solver start converged; carries the best iterate seen.
    #[error("solver failed: {reason}")]
    SolverFailed { reason: String, best: Box<Estimate> },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
