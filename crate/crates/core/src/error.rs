//! Crate-wide error type, grouped by how a caller should react.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or mutually inconsistent input.
    #[error("input error: {0}")]
    Input(String),

    /// Arguments outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A configured size cap would be exceeded.
    #[error("resource cap exceeded: {0}")]
    Resource(String),

    /// A moment recursion left its basin of attraction.
    #[error("recursion diverged at step {step}: {detail}")]
    Divergence { step: usize, detail: String },

    /// Operation defined, but not for these arguments.
    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
    pub fn resource(msg: impl Into<String>) -> Self {
        Error::Resource(msg.into())
    }
    pub fn unsupported(msg: impl Into<String>) -> Self {
        Error::Unsupported(msg.into())
    }
}
