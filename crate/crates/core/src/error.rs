use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("domain error: {0}")]
    Domain(String),

    /// The decorrelator cannot be built for this code set.
    #[error("receiver unavailable: {0}")]
    ReceiverUnavailable(String),

    /// The utility is monotone over the whole search range; `upper` is the
    /// last bracket end tried.
    #[error("no interior maximum of the utility below gamma = {upper:e}")]
    NoInteriorMaximum { upper: f64 },

    #[error("rejected: {0}")]
    Rejected(String),

    #[error("I/O error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV error at {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn csv(path: impl Into<PathBuf>, source: csv::Error) -> Self {
        Error::Csv {
            path: path.into(),
            source,
        }
    }

    /// Short category tag, used for CLI exit codes.
    pub fn category(&self) -> &'static str {
        match self {
            Error::Config(_) => "config",
            Error::Io { .. } | Error::Csv { .. } => "io",
            Error::Domain(_)
            | Error::ReceiverUnavailable(_)
            | Error::NoInteriorMaximum { .. }
            | Error::Rejected(_) => "numeric",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
