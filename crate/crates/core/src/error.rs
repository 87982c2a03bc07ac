use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty dataset")]
    EmptyDataset,

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("row {row}, column `{column}`: {message}")]
    Cell {
        row: usize,
        column: String,
        message: String,
    },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("schema mismatch at feature `{feature}`: {message}")]
    SchemaMismatch { feature: String, message: String },

    #[error("invalid parameter `{name}`: {message}")]
    InvalidParameter { name: &'static str, message: String },

    #[error("class {0} is absent from the data")]
    MissingClass(u8),

    #[error("undefined cosine: encoded instance has zero norm")]
    UndefinedCosine,

    #[error("training diverged: {0}")]
    Diverged(String),

    #[error("member {index} ({kind}) failed: {source}")]
    Member {
        index: usize,
        kind: String,
        #[source]
        source: Box<Error>,
    },

    #[error("zero-sum aggregate in combination rule `{0}`")]
    ZeroSumAggregate(&'static str),

    #[error("unbalanced design: {0}")]
    Unbalanced(String),

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("unsupported model format version {0}")]
    UnsupportedVersion(u32),
}

impl Error {
    pub fn param(name: &'static str, message: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
