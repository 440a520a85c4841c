use std::path::PathBuf;

use thiserror::Error;

use crate::examinee::BackendError;

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
    Malformed {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("no records in {0}")]
    NoRecords(PathBuf),

    #[error("duplicate {0}")]
    Duplicate(String),

    #[error("non-contiguous attempts for ({model}, {theorem}): expected index {expected}, found {found}")]
    NonContiguous {
        model: String,
        theorem: String,
        expected: u32,
        found: u32,
    },

    #[error("missing cell ({model}, {theorem})")]
    MissingCell { model: String, theorem: String },

    #[error("unknown model {0}")]
    UnknownModel(String),

    #[error("pass@{n} needs {n} ordered attempts for ({model}, {theorem}), only {available} recorded")]
    InsufficientDepth {
        model: String,
        theorem: String,
        n: u32,
        available: u32,
    },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("only {eligible} theorems eligible for selection, batch needs {batch}")]
    InsufficientItems { eligible: usize, batch: usize },

    #[error("backend failed on {theorem}: {source}")]
    Backend {
        theorem: String,
        #[source]
        source: BackendError,
    },

    #[error("run with f={f}, eta={eta}, model {model} failed: {source}")]
    Tuning {
        f: f64,
        eta: f64,
        model: String,
        #[source]
        source: Box<Error>,
    },

    #[error("serialization: {0}")]
    Serialize(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    /// True when the failure originated in an examinee backend rather than in
    /// the inputs.
    pub fn is_backend(&self) -> bool {
        match self {
            Error::Backend { .. } => true,
            Error::Tuning { source, .. } => source.is_backend(),
            _ => false,
        }
    }
}

/// Maps a csv error raised while reading `path` into a located error.
pub(crate) fn csv_error(path: &std::path::Path, err: csv::Error) -> Error {
    let line = err.position().map(|p| p.line()).unwrap_or(0);
    match err.into_kind() {
        csv::ErrorKind::Io(e) => Error::io(path, e),
        other => Error::Malformed {
            path: path.to_path_buf(),
            line,
            message: format!("{other:?}"),
        },
    }
}
