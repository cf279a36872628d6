//! Error type shared by all solvers and estimators.

/// Errors produced by solvers, simulators and estimators.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The local time reached its cap. Carries the in-path time at which the
    /// cap was hit, which doubles as a blow-up time estimate.
    #[error("local time blow-up: reached cap {cap} near t = {time_estimate}")]
    BlowUp { time_estimate: f64, cap: f64 },

    #[error(
        "refinement did not converge: gap {gap:e} > tol {tol:e} after {halvings} halvings (last epsilon {epsilon:e})"
    )]
    NonConvergence {
        gap: f64,
        tol: f64,
        halvings: u32,
        epsilon: f64,
    },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("reflection step failed: {0}")]
    StepFailure(String),

    #[error("domain assumption violated: {0}")]
    DomainAssumption(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
