//! Velocity fields of the interpolation.
//!
//! The marginals μ_t of X_t = α_t X₀ + β_t X₁ solve a continuity equation
//! with velocity v_t(x) = E[α̇_t X₀ + β̇_t X₁ | X_t = x]. Three backends
//! compute it:
//!
//! * [`GaussianDrift`] — closed forms for Gaussian endpoint pairs,
//!   v_t(x) = ṁ_t + ½ Σ̇_t Σ_t⁻¹ (x − m_t), valid on all of [0, 1];
//! * [`QuadratureDrift`] — Gauss–Hermite evaluation of the conditional
//!   expectation for log-concave endpoints, valid on the clamped range
//!   [δ, 1 − δ] with linear-in-t extrapolation in the margins;
//! * [`EmpiricalDrift`] — a kernel-mixture estimate built from target
//!   samples via the regularized score.
//!
//! All three implement [`DriftField`], which is what the flow integrator and
//! the verification sweeps consume. Backends are immutable after
//! construction (node tables are precomputed) and safe to share across
//! threads.

mod empirical;
mod gaussian;
mod quadrature;

pub use empirical::EmpiricalDrift;
pub use gaussian::{GaussianDrift, GaussianScore};
pub use quadrature::{conditional_log_density, QuadratureDrift};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::TIME_CLAMP;

/// A drift evaluation at one space-time point.
#[derive(Debug, Clone)]
pub struct DriftEvaluation {
    pub t: f64,
    pub x: DVector<f64>,
    pub v: DVector<f64>,
    pub jacobian: Option<DMatrix<f64>>,
}

/// Where quadrature nodes are placed.
///
/// For β/α ≥ `switch_ratio` the conditional law of X₁ given X_t = x is
/// dominated by its Gaussian factor centered at x/β with scale α/β, so the
/// rule is centered there (`HermiteCentered`). Near t = 0 that factor is
/// flat and the conditional is essentially μ₁ itself, so nodes follow a
/// standard-normal proposal (`BaseProposal`) — the shipped densities are all
/// O(1)-scaled, which is what makes the fixed proposal sufficient.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadratureMode {
    HermiteCentered,
    BaseProposal,
}

/// Configuration for quadrature-backed drift evaluation.
#[derive(Debug, Clone)]
pub struct QuadratureConfig {
    /// Gauss–Hermite nodes per dimension (tensorized for d ≤ 3).
    pub nodes_per_dim: usize,
    /// Force one node placement instead of switching on β/α.
    pub forced_mode: Option<QuadratureMode>,
    /// β/α threshold between the two node placements.
    pub switch_ratio: f64,
    /// Half-width δ of the excluded time margins [0, δ) and (1 − δ, 1].
    pub time_clamp: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig {
            nodes_per_dim: 64,
            forced_mode: None,
            switch_ratio: 1.0,
            time_clamp: TIME_CLAMP,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if self.nodes_per_dim < 8 {
            return Err(Error::Parameter(format!(
                "quadrature needs at least 8 nodes per dimension, got {}",
                self.nodes_per_dim
            )));
        }
        if !(self.switch_ratio > 0.0) || !self.switch_ratio.is_finite() {
            return Err(Error::Parameter(format!(
                "switch_ratio must be a positive real, got {}",
                self.switch_ratio
            )));
        }
        if !(self.time_clamp > 0.0 && self.time_clamp < 0.5) {
            return Err(Error::Parameter(format!(
                "time_clamp must lie in (0, 0.5), got {}",
                self.time_clamp
            )));
        }
        Ok(())
    }
}

/// A time-dependent velocity field with a Jacobian.
pub trait DriftField: Send + Sync {
    fn dim(&self) -> usize;

    /// Times where the field may be evaluated directly; flow integration
    /// restricts its grid to this interval.
    fn time_range(&self) -> (f64, f64);

    fn velocity(&self, t: f64, x: &DVector<f64>) -> Result<DVector<f64>>;

    fn jacobian(&self, t: f64, x: &DVector<f64>) -> Result<DMatrix<f64>>;

    fn evaluate(&self, t: f64, x: &DVector<f64>, with_jacobian: bool) -> Result<DriftEvaluation> {
        let v = self.velocity(t, x)?;
        let jacobian = if with_jacobian { Some(self.jacobian(t, x)?) } else { None };
        Ok(DriftEvaluation { t, x: x.clone(), v, jacobian })
    }
}

/// A time-dependent score field ∇ log μ_t, consumed by the SDE sampler.
pub trait ScoreField: Send + Sync {
    fn dim(&self) -> usize;
    fn time_range(&self) -> (f64, f64);
    fn score(&self, t: f64, x: &DVector<f64>) -> Result<DVector<f64>>;
}
