use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("schema must have at least one attribute")]
    EmptySchema,

    #[error("attribute {index} has domain size {size}; every attribute needs at least 2 values")]
    DomainTooSmall { index: usize, size: u32 },

    #[error("privacy level for attribute {index} must be positive and finite, got {value}")]
    InvalidEpsilon { index: usize, value: f64 },

    #[error("expected {expected} values, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("class index {index} out of range for {classes} classes")]
    ClassOutOfRange { index: usize, classes: usize },

    #[error("attribute index {index} out of range for {k} attributes")]
    AttributeOutOfRange { index: usize, k: usize },

    #[error("{what} requires {requirement}, got k = {k}")]
    UnsupportedK {
        what: &'static str,
        requirement: &'static str,
        k: usize,
    },

    #[error("{what} has {size} entries, above the configured cap of {cap}")]
    TooLarge {
        what: &'static str,
        size: u128,
        cap: u128,
    },

    #[error("linear program is infeasible; violated constraints: {violated:?}")]
    Infeasible { violated: Vec<String> },

    #[error("linear program is unbounded")]
    Unbounded,

    #[error("simplex did not converge within {iterations} iterations")]
    NoConvergence { iterations: usize },

    #[error("value {value} of attribute {index} is outside 0..{size}")]
    RecordOutOfRange { index: usize, value: u32, size: u32 },

    #[error("invalid distortion specification: {0}")]
    InvalidSpec(String),

    #[error("calibration failed: {0}")]
    Calibration(String),

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("dataset error: {0}")]
    Dataset(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
