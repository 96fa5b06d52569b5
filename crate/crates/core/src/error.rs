use thiserror::Error;

/// Errors produced by kernel construction, evaluation and the experiments.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("invalid kernel construction: {0}")]
    Construction(String),

    #[error("expression error at offset {offset}: {message}")]
    Expression { offset: usize, message: String },

    #[error("invalid signal: {0}")]
    Signal(String),

    #[error("signal evaluation failed at node k={k}: {source}")]
    Node { k: i64, source: Box<Error> },

    #[error("no limit: {0}")]
    NoLimit(String),

    #[error("experiment rejected: {0}")]
    Rejected(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
