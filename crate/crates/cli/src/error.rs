use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::svg::SvgError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] normlens::Error),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("{}:{line}: {message}", path.display())]
    Config {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{0}")]
    Usage(String),

    #[error("plot: {0}")]
    Plot(#[from] SvgError),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    /// 2 for input and usage problems, 3 when the data cannot support the
    /// requested analysis.
    pub fn exit_code(&self) -> i32 {
        use normlens::Error as E;
        match self {
            CliError::Core(E::InsufficientData(_) | E::Degenerate(_) | E::NoValidRatings) => 3,
            CliError::Plot(_) => 3,
            _ => 2,
        }
    }
}
