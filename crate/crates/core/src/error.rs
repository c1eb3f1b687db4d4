use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("{path}: malformed XML at byte {offset}: {message}")]
    Xml {
        path: PathBuf,
        offset: usize,
        message: String,
    },

    #[error("{path}: {message}")]
    Schema { path: PathBuf, message: String },

    #[error("{path}:{line}: {message}")]
    Format {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("invalid value: {0}")]
    Value(String),

    #[error("inconsistent data: {0}")]
    Consistency(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("empty vocabulary: no term reaches min_df = {min_df}")]
    EmptyVocabulary { min_df: usize },

    #[error("shape mismatch: expected {expected}, found {found}")]
    Shape { expected: usize, found: usize },

    #[error("degenerate training set: {0}")]
    DegenerateTraining(String),

    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    #[error("cannot stratify: class '{class}' has {count} members, fewer than k = {k}")]
    Stratification {
        class: String,
        count: usize,
        k: usize,
    },

    #[error("model incompatible with input: {0}")]
    ModelIncompatible(String),

    #[error("model file: {0}")]
    ModelFormat(String),

    #[error("usage: {0}")]
    Usage(String),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the command-line front end: 1 usage, 2 data, 3 numeric.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) | Error::Parameter(_) => 1,
            Error::DegenerateTraining(_) | Error::UndefinedMetric(_) => 3,
            _ => 2,
        }
    }
}
