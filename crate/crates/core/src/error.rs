use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{0} is empty")]
    EmptyInput(String),

    #[error("date {date:?} outside calendar {base_year}-01..{end}")]
    OutOfCalendar { date: String, base_year: i32, end: String },

    #[error("{path}:{line}: unknown entity {name:?} on side {side}")]
    UnknownEntity {
        path: PathBuf,
        line: usize,
        side: u8,
        name: String,
    },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimMismatch { expected: usize, actual: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("knowledge graph is not temporal")]
    NotTemporal,

    #[error("loss became non-finite in epoch {epoch}")]
    Diverged { epoch: usize },

    #[error("sampling failed: {0}")]
    Sampling(String),

    #[error("config error: {0}")]
    Config(String),

    /// Wraps an error with the pipeline stage it came from; the message
    /// already includes the inner error, so it is not exposed as a source.
    #[error("{stage}: {inner}")]
    Stage { stage: &'static str, inner: Box<Error> },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }

    pub(crate) fn invalid(message: impl Into<String>) -> Self {
        Error::InvalidArgument(message.into())
    }
}

/// Attach a pipeline stage label to an error.
pub trait StageExt<T> {
    fn stage(self, stage: &'static str) -> Result<T>;
}

impl<T> StageExt<T> for Result<T> {
    fn stage(self, stage: &'static str) -> Result<T> {
        self.map_err(|e| Error::Stage {
            stage,
            inner: Box::new(e),
        })
    }
}
