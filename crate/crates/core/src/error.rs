use thiserror::Error;

/// Errors surfaced by construction, validation and execution paths.
///
/// Numeric tolerance failures at construction time (a non-unitary matrix, a
/// non-normalized state) are reported as `Construction`; structural problems
/// with a protocol description as `Validation`; bad caller input as
/// `Argument`; register-count limits as `Resource`.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("construction check failed: {0}")]
    Construction(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("protocol validation failed: {0}")]
    Validation(String),

    #[error("resource limit exceeded: {0}")]
    Resource(String),
}

pub type Result<T> = std::result::Result<T, Error>;
