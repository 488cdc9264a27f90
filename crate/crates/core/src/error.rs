use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),
    #[error("invalid input: {0}")]
    Input(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("malformed file {path}: {msg}")]
    Format { path: PathBuf, msg: String },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

/// Coarse category of an [`Error`], used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Dimension,
    Input,
    Numerical,
    Degenerate,
    Config,
    Io,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Dimension(_) => ErrorKind::Dimension,
            Error::Input(_) => ErrorKind::Input,
            Error::Numerical(_) => ErrorKind::Numerical,
            Error::Degenerate(_) => ErrorKind::Degenerate,
            Error::Config(_) => ErrorKind::Config,
            Error::Format { .. } | Error::Io { .. } | Error::Csv(_) => ErrorKind::Io,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, msg: impl Into<String>) -> Self {
        Error::Format { path: path.into(), msg: msg.into() }
    }
}

impl ErrorKind {
    /// Process exit code for this category; 0 is reserved for success.
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorKind::Config => 2,
            ErrorKind::Input => 3,
            ErrorKind::Dimension => 4,
            ErrorKind::Numerical => 5,
            ErrorKind::Degenerate => 6,
            ErrorKind::Io => 7,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            ErrorKind::Config => "config",
            ErrorKind::Input => "input",
            ErrorKind::Dimension => "dimension",
            ErrorKind::Numerical => "numerical",
            ErrorKind::Degenerate => "degenerate",
            ErrorKind::Io => "io",
        }
    }
}
