use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate range [{min}, {max}]: maximum must exceed minimum")]
    DegenerateAnchor { min: f64, max: f64 },

    #[error("non-finite input: {0}")]
    NonFiniteInput(String),

    #[error("numerical variable `{0}` has no conceptual anchor")]
    MissingAnchor(String),

    #[error("unknown column `{0}`")]
    UnknownColumn(String),

    #[error("column `{column}`: value `{value}` is not a declared category")]
    UnknownCategory { column: String, value: String },

    #[error("invalid variable declaration `{name}`: {reason}")]
    InvalidSpec { name: String, reason: String },

    #[error("predictors are collinear; dependent columns: {}", .columns.join(", "))]
    RankDeficient { columns: Vec<String> },

    #[error("insufficient rows: need at least {needed}, have {available}")]
    InsufficientRows { needed: usize, available: usize },

    #[error("column `{0}` has zero variance")]
    ZeroVariance(String),

    #[error("group `{0}` is empty")]
    EmptyGroup(String),

    #[error("need at least 2 predictors to compare, found {0}")]
    TooFewPredictors(usize),

    #[error("result for `{result}` does not contain predictor `{iv}`")]
    MissingIv { result: String, iv: String },

    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("parse error at row {row}, column `{column}`: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    #[error("input file {0} is empty")]
    EmptyFile(PathBuf),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Process exit code for this error. Each variant maps to its own code.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Io { .. } => 3,
            Error::EmptyFile(_) => 4,
            Error::Parse { .. } => 5,
            Error::DegenerateAnchor { .. } => 10,
            Error::NonFiniteInput(_) => 11,
            Error::MissingAnchor(_) => 12,
            Error::UnknownColumn(_) => 13,
            Error::UnknownCategory { .. } => 14,
            Error::InvalidSpec { .. } => 15,
            Error::RankDeficient { .. } => 20,
            Error::InsufficientRows { .. } => 21,
            Error::ZeroVariance(_) => 22,
            Error::EmptyGroup(_) => 23,
            Error::TooFewPredictors(_) => 30,
            Error::MissingIv { .. } => 31,
            Error::SchemaMismatch(_) => 32,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
