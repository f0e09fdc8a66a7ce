use std::path::PathBuf;

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("input is empty")]
    EmptyInput,

    #[error("missing required column `{0}`")]
    MissingColumn(String),

    #[error("malformed csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("unknown event code (actor type {actor_type:?}, event code {event_code:?})")]
    UnknownEventCode {
        actor_type: String,
        event_code: String,
    },

    #[error("unknown class label {0}")]
    UnknownLabel(i64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("training failed: {0}")]
    Training(String),

    #[error("unsupported model format version {found} (this build reads up to {supported})")]
    FormatVersion { found: u32, supported: u32 },

    #[error("corrupted model payload: {0}")]
    Corrupted(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
