use std::path::PathBuf;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// A build-time problem: bad layer geometry, bad hyperparameter, bad config file.
    #[error("configuration error: {0}")]
    Config(String),

    /// An API contract was violated at call time (shape mismatch, epoch out of
    /// range, backward called twice on one forward pass, ...).
    #[error("contract violation: {0}")]
    Contract(String),

    /// Caller-supplied data is invalid (label out of range, ...).
    #[error("invalid input: {0}")]
    Input(String),

    /// A NaN or infinity appeared where finite values are guaranteed.
    #[error("numeric fault: {0}")]
    Numeric(String),

    /// IDX header carries the wrong magic number.
    #[error("{file}: bad magic number (expected {expected:#010x}, found {found:#010x})")]
    BadMagic {
        file: PathBuf,
        expected: u32,
        found: u32,
    },

    /// IDX payload ended early or its byte length disagrees with the declared
    /// dimensions.
    #[error("{file}: truncated or malformed payload: {detail}")]
    Truncated { file: PathBuf, detail: String },

    /// Image and label files declare different sample counts.
    #[error("image/label count mismatch: {images} images vs {labels} labels")]
    CountMismatch { images: usize, labels: usize },

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
