//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by the audit pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// Input violated a documented precondition or type invariant.
    #[error("validation: {0}")]
    Validation(String),

    /// A label is not part of the owning task's label set.
    #[error("unknown label `{label}` for task `{task}`")]
    UnknownLabel { task: String, label: String },

    /// A persisted line could not be decoded; `line` is 1-based.
    #[error("{path}:{line}: malformed record: {message}")]
    MalformedLine {
        path: String,
        line: usize,
        message: String,
    },

    /// An estimator could not produce a result (e.g. the DSL fallback ladder
    /// is exhausted or an IPW solve diverged at every configuration).
    #[error("estimation failed: {0}")]
    Estimation(String),

    /// A computation has an empty denominator or no usable rows.
    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Shorthand for `Error::Validation(format!(...))` call sites.
    pub fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }
}
