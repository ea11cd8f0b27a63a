use std::io;
use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the toolkit.
///
/// The variants split into two families that callers (the CLI in particular)
/// map to different exit statuses: [`Error::Usage`] for invalid arguments and
/// violated preconditions, everything else for unreadable or malformed input.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{0}")]
    Usage(String),

    #[error("{path}: line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("{path}: unsupported bitmap: {field}: {message}")]
    Format {
        path: PathBuf,
        field: &'static str,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

impl Error {
    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    pub fn is_usage(&self) -> bool {
        matches!(self, Error::Usage(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
