use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use num_complex::Complex64;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A scalar or configuration value is outside its admissible range.
    InvalidParameter(String),
    /// Cholesky factorization failed (non-Hermitian, indefinite or singular input).
    Decomposition(String),
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    /// OMP residual grew between iterations; the estimate reached so far is attached.
    Recovery { iteration: usize, partial: Vec<Complex64> },
    /// A detection curve never reaches the requested detection probability.
    NotComparable(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn check_len(what: &'static str, expected: usize, found: usize) -> Result<()> {
        if expected == found {
            Ok(())
        } else {
            Err(Error::DimensionMismatch { what, expected, found })
        }
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidParameter(msg) => write!(f, "invalid parameter: {msg}"),
            Error::Decomposition(msg) => write!(f, "decomposition failed: {msg}"),
            Error::DimensionMismatch { what, expected, found } => {
                write!(f, "dimension mismatch for {what}: expected {expected}, found {found}")
            }
            Error::Recovery { iteration, .. } => {
                write!(
                    f,
                    "sparse recovery broke down at iteration {iteration}: residual increased"
                )
            }
            Error::NotComparable(msg) => write!(f, "curves not comparable: {msg}"),
        }
    }
}

impl core::error::Error for Error {}
