use thiserror::Error;

/// Errors raised by the simulator and the experiment drivers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid block index (s={s}, k={k}): need 0 <= k <= s")]
    InvalidBlockIndex { s: usize, k: usize },

    #[error("local index {n} out of range for block (s={s}, k={k}) of dimension {dim}")]
    InvalidLocalIndex { s: usize, k: usize, n: usize, dim: usize },

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("cutoff {cutoff} too small: state has support up to {needed}")]
    CutoffTooSmall { cutoff: usize, needed: usize },

    #[error("dense oracle refuses cutoff {0} (maximum is {max})", max = crate::oracle::MAX_ORACLE_CUTOFF)]
    OracleTooLarge(usize),

    #[error("tridiagonal eigensolver did not converge at index {0}")]
    NoConvergence(usize),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter { name, reason: reason.into() }
}
