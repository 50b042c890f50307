use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised anywhere in the forecasting pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot open {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("column `{0}` not found in header")]
    MissingColumn(String),

    #[error("row {row}: cannot parse value `{value}`")]
    Parse { row: usize, value: String },

    #[error("row {row}: non-finite value")]
    NonFinite { row: usize },

    #[error("series is empty")]
    EmptySeries,

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("need at least {needed} observations, got {got}")]
    TooShort { needed: usize, got: usize },

    #[error("invalid input: {0}")]
    InvalidData(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("MASE undefined: in-sample naive error is zero")]
    UndefinedMase,

    #[error("numerical failure: {0}")]
    Numeric(String),
}

impl Error {
    /// True when the error stems from malformed or insufficient input data
    /// rather than from configuration or numerics.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::Csv(_)
                | Error::MissingColumn(_)
                | Error::Parse { .. }
                | Error::NonFinite { .. }
                | Error::EmptySeries
                | Error::LengthMismatch { .. }
                | Error::TooShort { .. }
                | Error::InvalidData(_)
        )
    }
}
