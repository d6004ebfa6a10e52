use std::io;
use std::path::PathBuf;

use crate::store::CrashPoint;

pub type Result<T, E = ServiceError> = std::result::Result<T, E>;

/// Failures above the domain layer. Domain errors pass through unchanged so
/// their codes reach clients as-is.
#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error(transparent)]
    Domain(#[from] mhb_core::Error),
    #[error("authentication failed")]
    AuthFailed,
    #[error("a valid session is required")]
    Unauthenticated,
    #[error("the store already holds data; import needs an empty store")]
    StoreNotEmpty,
    #[error("store directory {0} is in use by another process")]
    StoreLocked(PathBuf),
    #[error("store is corrupt: {0}")]
    Corrupt(String),
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
    #[error("simulated crash at {0:?}")]
    Crashed(CrashPoint),
}

impl ServiceError {
    pub fn code(&self) -> &'static str {
        match self {
            ServiceError::Domain(e) => e.code(),
            ServiceError::AuthFailed => "AUTH_FAILED",
            ServiceError::Unauthenticated => "UNAUTHENTICATED",
            ServiceError::StoreNotEmpty => "STORE_NOT_EMPTY",
            ServiceError::StoreLocked(_) => "STORE_LOCKED",
            ServiceError::Corrupt(_) => "STORE_CORRUPT",
            ServiceError::Io(_) => "IO_ERROR",
            ServiceError::Crashed(_) => "CRASHED",
        }
    }

    pub fn validation(msg: impl Into<String>) -> Self {
        ServiceError::Domain(mhb_core::Error::ValidationFailed(msg.into()))
    }

    pub fn domain(&self) -> Option<&mhb_core::Error> {
        match self {
            ServiceError::Domain(e) => Some(e),
            _ => None,
        }
    }
}
