use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// Input data violates a precondition (non-finite entries, empty matrix,
    /// all-zero spectrum, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A column with (numerically) zero norm where a unit direction is needed.
    #[error("column {index} has zero norm")]
    ZeroColumn { index: usize },

    /// A generation or experiment spec fails validation. `field` names the
    /// offending parameter so front ends can point at it.
    #[error("invalid spec: field `{field}`: {reason}")]
    InvalidSpec { field: String, reason: String },

    /// Basis construction ran out of independent columns.
    #[error("rank deficient: only {achieved} of {requested} independent columns found")]
    RankDeficient { achieved: usize, requested: usize },

    /// Problem exceeds the size limit of an exact reference routine.
    #[error("problem too large for exact oracle: {0}")]
    SizeLimit(String),

    /// Direction-search columns that exhausted the iteration budget when the
    /// caller did not opt into accepting last iterates.
    #[error("{} solver columns did not converge (first: {:?})", .columns.len(), .columns.first())]
    Unconverged { columns: Vec<usize> },

    /// A graph node with zero degree cannot be embedded by spectral clustering.
    #[error("affinity graph has isolated node {index}")]
    IsolatedNode { index: usize },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// Malformed matrix / label file.
    #[error("parse error at {path}:{line}: {reason}")]
    Parse {
        path: String,
        line: usize,
        reason: String,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn invalid_input(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub fn invalid_spec(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidSpec {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
