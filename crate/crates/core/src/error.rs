//! Error type shared by every module in the crate.
//!
//! Variants mirror the failure modes of the numerical pipeline: bad arguments,
//! domain violations (a time outside `[0, 1]`, a point of the wrong
//! dimension), clamped-time violations for quadrature-backed evaluations,
//! schedule degeneracies (vanishing Wronskian α β̇ − α̇ β), samplers that stop
//! making progress, diverging integrations, and plain numerical breakdown
//! (non-finite intermediates, singular covariances).

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument violates its documented range (κ ≤ 0, too few quadrature
    /// nodes, a tolerance that is not positive, ...).
    #[error("parameter error: {0}")]
    Parameter(String),

    /// An input lies outside the domain of the operation (time outside
    /// `[0, 1]`, dimension mismatch, non-symmetric covariance, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// A quadrature-backed evaluation was requested outside its clamped time
    /// range `[delta, 1 - delta]` (and outside the extrapolation margin).
    #[error("time-clamp error: t = {t} outside [{lo}, {hi}]")]
    TimeClamp { t: f64, lo: f64, hi: f64 },

    /// A precondition on the inputs failed (schedule not admissible,
    /// curvature ordering violated, ...).
    #[error("precondition error: {0}")]
    Precondition(String),

    /// The schedule is degenerate at the requested time (the determinant
    /// α β̇ − α̇ β fell below the guard threshold).
    #[error("schedule error: {0}")]
    Schedule(String),

    /// The operation is valid but not supported for these inputs
    /// (non-commuting covariances in the closed-form transport map).
    #[error("unsupported case: {0}")]
    Unsupported(String),

    /// A sampler failed to produce points (acceptance rate collapsed,
    /// mode search failed to converge).
    #[error("sampler error: {0}")]
    Sampler(String),

    /// An integration produced a non-finite state.
    #[error("divergence at step {step}: {message}")]
    Divergence { step: usize, message: String },

    /// Numerical breakdown not covered above; `context` names the failing
    /// evaluation point.
    #[error("numeric error: {context}")]
    Numeric { context: String },
}

impl Error {
    pub(crate) fn numeric(context: impl Into<String>) -> Self {
        Error::Numeric { context: context.into() }
    }
}
