use std::path::PathBuf;

use num_complex::Complex64;
use thiserror::Error;

/// Coarse error classes, used for CLI exit codes and FFI status codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Validation,
    Numerical,
    Io,
}

/// Parameter validation failures.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpecError {
    #[error("gamma out of range: {0} (must lie strictly between 0 and 1)")]
    GammaOutOfRange(f64),
    #[error("negative variance: {name} = {value}")]
    NegativeVariance { name: &'static str, value: f64 },
    #[error("negative spike strength: lambda = {0}")]
    NegativeLambda(f64),
    #[error("normalization violated: gamma*n*theta1^2 + (1-gamma)*n*theta2^2 = {0}, expected 1")]
    Normalization(f64),
    #[error("community sizes too small: n1 = {n1}, n = {n} (need 2 <= n1 <= n-2)")]
    BlockTooSmall { n1: usize, n: usize },
    #[error("gamma*n = {0} is not within 0.5 of an integer block size")]
    BlockSizeMismatch(f64),
    #[error("degenerate scale: q = {0} (rescaling needs 0 < q < 1)")]
    DegenerateScale(f64),
    #[error("probability out of range: {name} = {value}")]
    Probability { name: &'static str, value: f64 },
    #[error("shift {shift} requires {requirement}")]
    ShiftMismatch {
        shift: &'static str,
        requirement: &'static str,
    },
    #[error("non-finite parameter: {0}")]
    NonFinite(&'static str),
    #[error("{0}")]
    Other(String),
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error("QVE solver did not converge at z = {z} after {iterations} iterations (residual {residual:e})")]
    NonConvergence {
        z: Complex64,
        iterations: usize,
        residual: f64,
    },
    #[error("no real Herglotz continuation at z = {0}: point lies inside the support")]
    InsideSupport(f64),
    #[error("upper edge search failed: {0}")]
    EdgeSearch(String),
    #[error("z = {z} is within {distance:e} of the spectrum")]
    TooCloseToSpectrum { z: f64, distance: f64 },
    #[error("matrix contains non-finite entries")]
    NonFinite,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("eigendecomposition failed: {0}")]
    Eigen(String),
    #[error("diagnostics failed: {0}")]
    CheckFailed(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed input: {0}")]
    Format(String),
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Spec(_) | Error::InvalidArgument(_) | Error::DimensionMismatch { .. } => {
                ErrorClass::Validation
            }
            Error::Io { .. } | Error::Format(_) => ErrorClass::Io,
            Error::NonConvergence { .. }
            | Error::InsideSupport(_)
            | Error::EdgeSearch(_)
            | Error::TooCloseToSpectrum { .. }
            | Error::NonFinite
            | Error::Eigen(_)
            | Error::CheckFailed(_) => ErrorClass::Numerical,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
