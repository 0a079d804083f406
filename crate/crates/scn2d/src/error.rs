use thiserror::Error;

/// Errors produced across the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// Operand shapes do not agree; the message names both shapes.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// A NaN or infinity was encountered where finite data is required.
    #[error("non-finite value: {0}")]
    NonFinite(String),

    /// A candidate hidden node whose activation vector is numerically degenerate.
    #[error("degenerate candidate node: {0}")]
    DegenerateNode(String),

    /// Normalization over an all-zero collection of indicators.
    #[error("degenerate normalization: {0}")]
    DegenerateNormalization(String),

    /// Malformed model or data stream; `offset` is the byte position of the failure.
    #[error("parse error at byte {offset}: {msg}")]
    Parse { offset: usize, msg: String },

    /// A structurally invalid file (bad magic, ragged rows, count mismatch, ...).
    #[error("format error: {0}")]
    Format(String),

    /// A model file written by an unsupported schema version.
    #[error("unsupported model version: {0}")]
    Version(String),

    /// Invalid configuration values.
    #[error("invalid config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
