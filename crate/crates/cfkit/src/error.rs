use thiserror::Error;

/// Errors shared by all modules of the crate.
#[derive(Debug, Error)]
pub enum CfError {
    /// Two elements (or an element and a container) belong to different groups.
    #[error("group mismatch: {0}")]
    DomainError(String),

    /// A caller-side contract was violated (bad index list, missing level, ...).
    #[error("precondition failed: {0}")]
    PreconditionError(String),

    /// Internal consistency check failed; the input data contradicts an
    /// invariant that should be guaranteed (e.g. a factorization that must be
    /// unique was not).
    #[error("invariant violation: {0}")]
    InvariantViolation(String),

    /// The sequence does not satisfy the structural conditions required by
    /// the requested operation.
    #[error("validation failed: {0}")]
    ValidationError(String),

    /// Text or file decoding failed.
    #[error("parse error: {0}")]
    ParseError(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, CfError>;
