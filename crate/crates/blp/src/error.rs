use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the localization library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid segment: start {start} must be strictly less than end {end}")]
    InvalidSegment { start: f64, end: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("unit range ({start_unit}, {end_unit}) invalid for a grid of {num_units} units")]
    InvalidUnitRange {
        start_unit: usize,
        end_unit: usize,
        num_units: usize,
    },

    #[error("length mismatch: expected {expected} entries, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("probability tracks do not carry {0} probabilities")]
    MissingTrack(&'static str),

    #[error("class scores must sum to 1 (sum = {sum})")]
    NotNormalized { sum: f64 },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("unit {unit} contains no signal samples")]
    EmptyUnit { unit: usize },

    #[error("training diverged at epoch {epoch}: loss is not finite")]
    Diverged { epoch: usize },

    #[error("dataset generation failed: {0}")]
    Generation(String),

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed file {path}: {reason}")]
    Malformed { path: PathBuf, reason: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn malformed(path: impl Into<PathBuf>, reason: impl Into<String>) -> Self {
        Error::Malformed {
            path: path.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn parameter(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
