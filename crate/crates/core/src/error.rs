use thiserror::Error;

/// Errors raised anywhere in the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("line {line}: duplicate {kind} id `{id}`")]
    DuplicateId { kind: &'static str, id: String, line: u64 },

    #[error("invalid rating `{0}`: must be one of 2.0, 2.5, 3.0, 3.5, 4.0, 4.5, 5.0")]
    InvalidRating(String),

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("feature arity mismatch: model expects {expected}, got {got}")]
    Arity { expected: usize, got: usize },

    #[error("unsupported model format version {0}")]
    ModelVersion(u32),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
