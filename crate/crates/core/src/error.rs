use thiserror::Error;

use crate::spectral::PicardReport;

/// Errors raised by the solvers and evaluators in this crate.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter lies outside its admissible range.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// Input data violates a structural or physical invariant.
    #[error("validation failed: {0}")]
    Validation(String),

    /// No evaluation branch of the Mittag-Leffler function met the accuracy target.
    #[error(
        "Mittag-Leffler accuracy target missed at alpha={alpha}, beta={beta}, z={z}: \
         best relative error estimate {estimate:e}"
    )]
    Accuracy {
        alpha: f64,
        beta: f64,
        z: f64,
        estimate: f64,
    },

    /// Argument beyond the documented overflow bound.
    #[error("argument out of supported range: {0}")]
    OutOfRange(String),

    /// The tridiagonal eigensolver failed to converge for one eigenvalue.
    #[error("eigensolver did not converge for eigenvalue index {index}")]
    EigenNonConvergence { index: usize },

    /// The implicit L1 step matrix is not positive definite.
    #[error("L1 step matrix is indefinite (pivot {pivot:e} at row {row}); refine the time grid")]
    Stability { row: usize, pivot: f64 },

    /// Fixed-point iteration stopped at `max_iter` above tolerance.
    #[error(
        "Picard iteration did not reach tolerance after {} iterations (last residual {:e})",
        .0.iterations,
        .0.residuals.last().copied().unwrap_or(f64::NAN)
    )]
    Convergence(Box<PicardReport>),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    /// Broad class used by front ends to pick an exit status.
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Parameter(_) | Error::Validation(_) => ErrorKind::Validation,
            Error::Convergence(_) => ErrorKind::Convergence,
            Error::Accuracy { .. }
            | Error::OutOfRange(_)
            | Error::EigenNonConvergence { .. }
            | Error::Stability { .. } => ErrorKind::Numeric,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Validation,
    Convergence,
    Numeric,
}
