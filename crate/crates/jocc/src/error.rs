//! Error types shared across the harness.

use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Caller handed in a value that violates an operation's precondition.
    #[error("rejected input: {0}")]
    RejectedInput(String),

    /// Two components that must stay in lockstep have drifted apart.
    #[error("contract violation: {0}")]
    ContractViolation(String),

    /// The physical simulation produced a non-finite or impossible state.
    #[error("simulation fault: {0}")]
    SimulationFault(String),

    /// A learner diverged or produced a non-finite loss.
    #[error("training fault: {0}")]
    TrainingFault(String),

    #[error("parse error at {path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
