use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A malformed line in one of the text formats.
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("{path}: missing key `{key}`")]
    MissingKey { path: String, key: &'static str },

    #[error("file size mismatch: expected {expected} bytes, found {actual} bytes")]
    SizeMismatch { expected: u64, actual: u64 },

    #[error("coordinate ({row}, {col}) outside {rows}x{cols} raster")]
    OutOfBounds {
        row: usize,
        col: usize,
        rows: usize,
        cols: usize,
    },

    #[error("pixel ({row}, {col}) claimed by class {first} and class {second}")]
    DuplicateClaim {
        row: usize,
        col: usize,
        first: u32,
        second: u32,
    },

    #[error("dimension mismatch: expected {expected}, found {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("empty input: {0}")]
    Empty(String),

    #[error("class {class_id} is degenerate: {reason}")]
    Degenerate { class_id: u32, reason: String },

    #[error("{what} is singular after ridge (condition estimate {condition:.3e})")]
    SingularCovariance { what: String, condition: f64 },

    #[error("class {class_id} has a zero reference spectrum")]
    ZeroReference { class_id: u32 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("{classes} classes do not fit in a one-byte label layer")]
    LabelOverflow { classes: usize },

    #[error("class set mismatch: {0}")]
    ClassMismatch(String),

    #[error("kappa undefined: chance agreement equals 1")]
    UndefinedKappa,

    #[error("ground-truth class {class} has no pixels")]
    ZeroColumn { class: usize },

    #[error("regions overlap: {0}")]
    Overlap(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: &str, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.to_string(),
            line,
            msg: msg.into(),
        }
    }
}
