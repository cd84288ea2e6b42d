use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    /// Input outside the operation's domain (unknown outcome, length mismatch, ...).
    #[error("domain error: {0}")]
    Domain(String),
    /// Exhaustive enumeration would exceed the configured limit.
    #[error("resource limit exceeded: {what} needs {needed}, limit is {limit}")]
    Resource {
        what: &'static str,
        needed: u128,
        limit: u128,
    },
    #[error("linear program is infeasible")]
    Infeasible,
    #[error("linear program is unbounded")]
    Unbounded,
    /// A structural assumption (integral vertices, matroid axioms) was violated.
    #[error("structural error: {0}")]
    Structural(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn structural(msg: impl Into<String>) -> Self {
        Error::Structural(msg.into())
    }
}
