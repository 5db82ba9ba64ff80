use thiserror::Error;

/// Errors raised by the library.
///
/// `Argument` covers bad caller input (out-of-range indices, unknown symbols),
/// `Model` covers sources or parameters that violate their invariants, and
/// `Guard` is raised when a computation refuses to run because it would be
/// too large.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("model error: {0}")]
    Model(String),
    #[error("guard exceeded: {0}")]
    Guard(String),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn argument<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Argument(msg.into()))
}

pub(crate) fn model<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Model(msg.into()))
}
