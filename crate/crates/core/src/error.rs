use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed resource file. `line` is 1-based; 0 means the whole file.
    #[error("{source_name}:{line}: {message}")]
    Schema {
        source_name: String,
        line: usize,
        message: String,
    },

    #[error("no valid ratings")]
    NoValidRatings,

    /// Not enough rows, targets or class members to carry out a step.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// The statistic is undefined for the input (e.g. zero variance).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: std::path::PathBuf,
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn schema(source_name: &str, line: usize, message: impl Into<String>) -> Self {
        Error::Schema {
            source_name: source_name.to_string(),
            line,
            message: message.into(),
        }
    }
}
