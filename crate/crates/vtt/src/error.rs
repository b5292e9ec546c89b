use std::path::PathBuf;
use std::time::Duration;

#[derive(Debug, thiserror::Error)]
pub enum VttError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error("line {line}: {message}")]
    Format { line: u64, message: String },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] vtt_core::Error),

    #[error(transparent)]
    Adapter(#[from] AdapterError),

    /// A session stopped early; its partial log was still written.
    #[error("{context}: {source}")]
    Session {
        context: String,
        #[source]
        source: vtt_core::Error,
    },
}

impl VttError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        VttError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(line: u64, message: impl Into<String>) -> Self {
        VttError::Format {
            line,
            message: message.into(),
        }
    }
}

/// Failures of an external answer source.
#[derive(Debug, thiserror::Error)]
pub enum AdapterError {
    #[error("no reply within {0:?}")]
    Timeout(Duration),

    #[error("reply `{0}` is not a decimal number")]
    Parse(String),

    #[error("reply {0} is outside [0, 1]")]
    OutOfRange(f64),

    #[error("answer process closed its output")]
    Closed,

    #[error("answer process i/o: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, VttError>;
