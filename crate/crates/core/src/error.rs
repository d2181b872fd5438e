use thiserror::Error;

/// Errors produced by the imaging and training pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: field `{field}` {reason}")]
    InvalidField { field: &'static str, reason: String },

    #[error("config parse error: {0}")]
    ConfigParse(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("geometry mismatch: expected geometry {expected:016x}, found {found:016x}")]
    GeometryMismatch { expected: u64, found: u64 },

    #[error("SNR is undefined for an all-zero echo")]
    ZeroSignal,

    #[error("direct evaluation too large: {terms} terms exceeds the limit of {limit}")]
    TooLarge { terms: u64, limit: u64 },

    #[error("invalid network: {0}")]
    InvalidNetwork(String),

    #[error("non-finite loss at step {step} (first non-finite gradient in layer {layer})")]
    NonFinite { step: u64, layer: usize },

    #[error("unknown glyph {0:?}")]
    UnknownGlyph(char),

    #[error("missing checkpoint for method {0}")]
    MissingCheckpoint(String),

    #[error("malformed file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
