use thiserror::Error;

/// Failure classes surfaced by the library. The CLI maps each class onto a
/// distinct exit code.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or out-of-range input.
    #[error("input error: {0}")]
    Input(String),
    /// The request is valid but too large for an exact (enumerating) path.
    #[error("capability error: {0}")]
    Capability(String),
    /// A bug: an internal fixpoint or consistency expectation failed.
    #[error("internal error: {0}")]
    Internal(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub(crate) fn capability(msg: impl Into<String>) -> Self {
        Error::Capability(msg.into())
    }
}
