use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied value violates an operation's precondition.
    #[error("argument error: {0}")]
    Argument(String),

    #[error("configuration error: {0}")]
    Config(String),

    /// Input data is missing something the operation needs.
    #[error("data error: {0}")]
    Data(String),

    /// The runtime environment cannot satisfy the request (missing backbone,
    /// missing credentials).
    #[error("environment error: {0}")]
    Environment(String),

    #[error("undefined correlation: {0}")]
    UndefinedCorrelation(String),

    #[error("unsupported combination: {0}")]
    Unsupported(String),

    #[error("consistency error: {0}")]
    Consistency(String),

    #[error("generation failed for anchor {index}: {message}")]
    Generation { index: usize, message: String },

    #[error("training aborted at batch {batch}: {message}")]
    Training { batch: usize, message: String },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Short machine-readable category, used for CLI error lines and FFI codes.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Argument(_) => "argument",
            Error::Config(_) => "config",
            Error::Data(_) => "data",
            Error::Environment(_) => "environment",
            Error::UndefinedCorrelation(_) => "undefined",
            Error::Unsupported(_) => "unsupported",
            Error::Consistency(_) => "consistency",
            Error::Generation { .. } => "generation",
            Error::Training { .. } => "training",
            Error::Parse { .. } => "parse",
            Error::Io { .. } => "io",
        }
    }
}
