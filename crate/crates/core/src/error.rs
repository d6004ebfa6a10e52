use alloc::string::String;

use thiserror::Error;

use crate::access::DenyReason;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Every failure a domain operation can report. [`Error::code`] yields the
/// stable machine-readable name used on the wire and in CLI diagnostics.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("validation failed: {0}")]
    ValidationFailed(String),
    #[error("dangling reference: {0}")]
    DanglingReference(String),
    #[error("not found: {0}")]
    NotFound(String),
    #[error("stale version: expected {expected}, stored {actual}")]
    StaleVersion { expected: u64, actual: u64 },
    #[error("entity is still referenced by {0}")]
    Referenced(String),
    #[error("forbidden: {0}")]
    Forbidden(DenyReason),
    #[error("schedule is frozen for this term")]
    ForbiddenFrozen,
    #[error("duplicate: {0}")]
    Duplicate(String),
    #[error("kind mismatch: {0}")]
    KindMismatch(String),
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("unknown kind `{0}`")]
    UnknownKind(String),
}

impl Error {
    pub fn code(&self) -> &'static str {
        match self {
            Error::ValidationFailed(_) => "VALIDATION_FAILED",
            Error::DanglingReference(_) => "DANGLING_REFERENCE",
            Error::NotFound(_) => "NOT_FOUND",
            Error::StaleVersion { .. } => "STALE_VERSION",
            Error::Referenced(_) => "REFERENCED",
            Error::Forbidden(_) => "FORBIDDEN",
            Error::ForbiddenFrozen => "FORBIDDEN_FROZEN",
            Error::Duplicate(_) => "DUPLICATE",
            Error::KindMismatch(_) => "KIND_MISMATCH",
            Error::InvalidState(_) => "INVALID_STATE",
            Error::UnknownKind(_) => "UNKNOWN_KIND",
        }
    }

    pub(crate) fn validation(msg: impl Into<String>) -> Error {
        Error::ValidationFailed(msg.into())
    }

    pub(crate) fn not_found(what: impl Into<String>) -> Error {
        Error::NotFound(what.into())
    }

    pub(crate) fn dangling(what: impl Into<String>) -> Error {
        Error::DanglingReference(what.into())
    }
}
