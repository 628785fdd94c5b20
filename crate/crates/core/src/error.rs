use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the workbench.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller broke an operation's precondition (shape mismatch, stepping a
    /// finished episode, non-finite input, ...).
    #[error("contract violation: {0}")]
    Contract(String),

    /// A loss, gradient or parameter became non-finite during training.
    #[error("training diverged: {0}")]
    Divergence(String),

    #[error("replay buffer not ready: holds {size} transitions, batch needs {batch}")]
    NotReady { size: usize, batch: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{path}: parse error on line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("empty report: {0}")]
    Empty(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn contract(msg: impl Into<String>) -> Error {
    Error::Contract(msg.into())
}
