use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("column `{column}` is unusable: {reason}")]
    UnusableColumn { column: String, reason: String },

    #[error("numerical degeneracy: {0}")]
    Degenerate(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("unknown method `{0}`")]
    UnknownMethod(String),

    #[error("schema mismatch: {0}")]
    Schema(String),

    #[error("amputation failed: {0}")]
    Amputation(String),

    #[error("scenario file: {0}")]
    Scenario(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
