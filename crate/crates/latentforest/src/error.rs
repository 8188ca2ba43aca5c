//! Crate-wide error type.

use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("header mismatch: {0}")]
    HeaderMismatch(String),

    #[error("target column must take exactly two distinct values, found {0:?}")]
    LabelCardinality(Vec<String>),

    #[error("dataset is empty: {0}")]
    EmptyDataset(String),

    #[error("shape mismatch: expected {expected}, got {found}")]
    ShapeMismatch { expected: String, found: String },

    #[error("class {label} has {count} samples, need at least 2")]
    ClassTooSmall { label: u8, count: usize },

    #[error("input contains a single class")]
    SingleClass,

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("training diverged at epoch {epoch}")]
    Diverged { epoch: usize },

    #[error("unknown category {value:?} in column {column:?}")]
    UnknownCategory { column: String, value: String },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable machine-readable tag, used by the CLI error object.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::Csv(_) => "csv",
            Error::HeaderMismatch(_) => "header_mismatch",
            Error::LabelCardinality(_) => "label_cardinality",
            Error::EmptyDataset(_) => "empty_dataset",
            Error::ShapeMismatch { .. } => "shape_mismatch",
            Error::ClassTooSmall { .. } => "class_too_small",
            Error::SingleClass => "single_class",
            Error::NonFinite(_) => "non_finite",
            Error::InvalidConfig(_) => "invalid_config",
            Error::Diverged { .. } => "diverged",
            Error::UnknownCategory { .. } => "unknown_category",
            Error::Json(_) => "json",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
