use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors surfaced by field evaluation, verification and solver routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("space dimension must be at least 3, got {0}")]
    DimensionTooSmall(usize),

    #[error("point has {got} coordinates, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("point lies outside the closed upper half-space (x_n = {xn})")]
    OutsideHalfSpace { xn: f64 },

    #[error("evaluation at (or too close to) the singular point of an inversion")]
    Singularity,

    #[error("field is not positive at a sample point (value {value})")]
    NonPositive { value: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("bracket endpoints do not straddle a sign change")]
    BadBracket,

    #[error("fit did not converge after {iterations} iterations (rms {rms:.3e})")]
    FitFailure {
        iterations: usize,
        rms: f64,
        /// Best parameter iterate seen before giving up.
        best: Vec<f64>,
    },

    #[error("no violation-free plane position found in the sweep grid")]
    SweepFailure,

    #[error("nonlinear solve did not converge: {0}")]
    NonConvergence(String),

    #[error("ODE integration aborted: {0}")]
    Integration(String),

    #[error("linear system is singular or ill-conditioned")]
    SingularMatrix,
}
