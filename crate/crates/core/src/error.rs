use num_complex::Complex64;
use thiserror::Error;

use crate::roots::AuditEntry;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("polynomial root solve did not converge: {0}")]
    RootSolve(String),

    #[error("contour not certified: {0}")]
    NotCertified(String),

    #[error("subdivision failed: {0}")]
    SubdivisionFailure(String),

    #[error("newton iterate left the doubled box around {center} (last iterate {last})")]
    NewtonEscape { center: Complex64, last: Complex64 },

    #[error("root count mismatch: found {found}, expected {expected} ({} audit entries)", audit.len())]
    CountMismatch {
        found: u64,
        expected: u64,
        audit: Vec<AuditEntry>,
    },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),
}

pub type Result<T> = std::result::Result<T, Error>;
