use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("config line {line}: {msg}")]
    ConfigLine { line: usize, msg: String },

    #[error("invalid config: {0}")]
    Config(String),

    #[error("{path}: line {line}: {msg}")]
    Parse { path: String, line: u64, msg: String },

    #[error("{0}: empty input")]
    EmptyInput(String),

    #[error("{path}: {msg}")]
    Schema { path: String, msg: String },

    #[error("length mismatch: {0} estimates vs {1} truth samples")]
    LengthMismatch(usize, usize),

    #[error("bench needs at least {min} iterations, got {got}")]
    TooFewIterations { min: usize, got: usize },

    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Core(#[from] relest_core::Error),
}

/// Failure category, also used as the process exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Category {
    Config = 2,
    Parse = 3,
    Runtime = 4,
}

impl Error {
    pub fn category(&self) -> Category {
        match self {
            Error::ConfigLine { .. } | Error::Config(_) | Error::TooFewIterations { .. } => Category::Config,
            Error::Parse { .. } | Error::EmptyInput(_) | Error::Schema { .. } => Category::Parse,
            Error::Core(relest_core::Error::Config(_)) => Category::Config,
            _ => Category::Runtime,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Error {
        let path = path.into();
        move |source| Error::Io { path, source }
    }
}
