use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the attribute, pooling, evaluation and I/O layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid image: {0}")]
    InvalidImage(String),

    #[error("shape mismatch: {left_w}x{left_h} vs {right_w}x{right_h}")]
    ShapeMismatch {
        left_w: usize,
        left_h: usize,
        right_w: usize,
        right_h: usize,
    },

    #[error("image {width}x{height} is smaller than the {side}x{side} window")]
    WindowTooLarge {
        width: usize,
        height: usize,
        side: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("empty map")]
    EmptyMap,

    #[error("weights sum to zero")]
    DegenerateWeights,

    #[error("correlation undefined: {0}")]
    UndefinedCorrelation(String),

    #[error("logistic fit degenerate: {0}")]
    FitDegenerate(String),

    #[error("invalid sample size {0} (need at least 4)")]
    InvalidSampleSize(usize),

    #[error("invalid codeword: {0}")]
    InvalidCodeword(String),

    #[error("manifest schema error in {path}: {msg}")]
    ManifestSchema { path: PathBuf, msg: String },

    #[error("{path}: row {row}: {msg}")]
    Record {
        path: PathBuf,
        row: u64,
        msg: String,
    },

    #[error("cannot decode {path}: {msg}")]
    Decode { path: PathBuf, msg: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Short stable tag used in report rows (`error` column).
    pub fn tag(&self) -> &'static str {
        match self {
            Error::InvalidImage(_) => "InvalidImage",
            Error::ShapeMismatch { .. } => "ShapeMismatch",
            Error::WindowTooLarge { .. } => "WindowTooLarge",
            Error::InvalidParameter(_) => "InvalidParameter",
            Error::EmptyMap => "EmptyMap",
            Error::DegenerateWeights => "DegenerateWeights",
            Error::UndefinedCorrelation(_) => "UndefinedCorrelation",
            Error::FitDegenerate(_) => "FitDegenerate",
            Error::InvalidSampleSize(_) => "InvalidSampleSize",
            Error::InvalidCodeword(_) => "InvalidCodeword",
            Error::ManifestSchema { .. } => "ManifestSchemaError",
            Error::Record { .. } => "RecordError",
            Error::Decode { .. } => "DecodeError",
            Error::Io { .. } => "IoError",
            Error::Csv(_) => "CsvError",
            Error::Json(_) => "JsonError",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
