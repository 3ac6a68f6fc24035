use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A malformed or inconsistent row in a nodes/edges/labels file.
    #[error("{source_name}:{line}: {message}")]
    Load {
        source_name: String,
        line: usize,
        message: String,
    },

    #[error("missing file: {}", .0.display())]
    MissingFile(PathBuf),

    #[error("io error on {}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("malformed artifact: {0}")]
    Format(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },

    #[error("token {0:?} is not in the model vocabulary")]
    OutOfVocabulary(String),

    /// No schema-valid edge type was available while sampling a path.
    #[error("sampling dead end: {0}")]
    DeadEnd(String),

    /// Remote scorer unreachable, returned a non-success status, or sent an unparsable body.
    #[error("backend transport error: {0}")]
    Transport(String),

    #[error("backend error (HTTP {status}): {message}")]
    Backend { status: u16, message: String },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        let path = path.into();
        if source.kind() == std::io::ErrorKind::NotFound {
            Error::MissingFile(path)
        } else {
            Error::Io { path, source }
        }
    }

    /// True for failures of the scoring backend rather than of the data.
    pub fn is_backend(&self) -> bool {
        matches!(self, Error::Transport(_) | Error::Backend { .. })
    }
}
