//! Closed-form drift, flow map, and score for Gaussian endpoint pairs.
//!
//! For μ₀ = N(m₀, Σ₀), μ₁ = N(m₁, Σ₁) the marginal at time t is
//! N(m_t, Σ_t) with m_t = α m₀ + β m₁ and Σ_t = α² Σ₀ + β² Σ₁, and the
//! velocity field is affine:
//!
//! ```text
//!     v_t(x)  = ṁ_t + ½ Σ̇_t Σ_t⁻¹ (x − m_t),      Σ̇_t = 2αα̇ Σ₀ + 2ββ̇ Σ₁,
//!     Dv_t    = ½ Σ̇_t Σ_t⁻¹                        (symmetric when Σ₀, Σ₁ commute).
//! ```
//!
//! When Σ₀ and Σ₁ commute the flow of v integrates in closed form to
//!
//! ```text
//!     f_t(x)  = m_t + Σ_t^{1/2} Σ₀^{−1/2} (x − m₀),
//! ```
//!
//! whose t = 1 value is exactly the optimal transport map between the two
//! Gaussians. Note the anchor is (x − m₀): f₀ must be the identity.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;
use crate::measures::{AffineMap, GaussianMeasure};
use crate::schedules::Schedule;

use super::{DriftField, ScoreField};

/// Exact drift for a Gaussian endpoint pair. Valid on all of [0, 1]:
/// Σ_t is positive definite for every t because α and β never vanish
/// simultaneously.
#[derive(Debug, Clone)]
pub struct GaussianDrift {
    mu0: GaussianMeasure,
    mu1: GaussianMeasure,
    schedule: Schedule,
}

impl GaussianDrift {
    pub fn new(mu0: GaussianMeasure, mu1: GaussianMeasure, schedule: Schedule) -> Result<Self> {
        if mu0.dim() != mu1.dim() {
            return Err(Error::Domain(format!(
                "endpoint dimensions differ: {} vs {}",
                mu0.dim(),
                mu1.dim()
            )));
        }
        Ok(GaussianDrift { mu0, mu1, schedule })
    }

    pub fn schedule(&self) -> &Schedule {
        &self.schedule
    }

    pub fn endpoints(&self) -> (&GaussianMeasure, &GaussianMeasure) {
        (&self.mu0, &self.mu1)
    }

    /// (m_t, ṁ_t, Σ_t, Σ̇_t) at time t.
    fn marginal_parts(&self, t: f64) -> Result<(DVector<f64>, DVector<f64>, DMatrix<f64>, DMatrix<f64>)> {
        let sv = self.schedule.eval(t)?;
        let m = sv.alpha * self.mu0.mean() + sv.beta * self.mu1.mean();
        let m_dot = sv.alpha_dot * self.mu0.mean() + sv.beta_dot * self.mu1.mean();
        let cov = sv.alpha * sv.alpha * self.mu0.cov() + sv.beta * sv.beta * self.mu1.cov();
        let cov_dot = 2.0 * sv.alpha * sv.alpha_dot * self.mu0.cov()
            + 2.0 * sv.beta * sv.beta_dot * self.mu1.cov();
        Ok((m, m_dot, cov, cov_dot))
    }

    /// The closed-form flow map f_t(x) = m_t + Σ_t^{1/2} Σ₀^{−1/2} (x − m₀),
    /// valid when the endpoint covariances commute (they are then
    /// simultaneously diagonalizable, and the affine ODE decouples along the
    /// shared eigenbasis).
    pub fn flow_map(&self, t: f64, x: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(self.flow_map_affine(t)?.apply(x))
    }

    /// The same closed-form flow map as an affine map (its linear part is the
    /// flow Jacobian).
    pub fn flow_map_affine(&self, t: f64) -> Result<AffineMap> {
        let comm = linalg::commutator_norm(self.mu0.cov(), self.mu1.cov());
        if comm > 1e-10 {
            return Err(Error::Unsupported(format!(
                "closed-form flow map needs commuting covariances (|[S0, S1]| = {comm:.3e}); \
                 integrate the drift instead"
            )));
        }
        let (m, _, cov, _) = self.marginal_parts(t)?;
        let a = linalg::sym_sqrt(&cov)? * linalg::sym_inv_sqrt(self.mu0.cov())?;
        let b = &m - &a * self.mu0.mean();
        Ok(AffineMap { a, b })
    }
}

impl DriftField for GaussianDrift {
    fn dim(&self) -> usize {
        self.mu0.dim()
    }

    fn time_range(&self) -> (f64, f64) {
        (0.0, 1.0)
    }

    fn velocity(&self, t: f64, x: &DVector<f64>) -> Result<DVector<f64>> {
        let (m, m_dot, cov, cov_dot) = self.marginal_parts(t)?;
        let centered = x - &m;
        let solved = linalg::solve_spd(&cov, &centered)?;
        Ok(m_dot + 0.5 * cov_dot * solved)
    }

    fn jacobian(&self, t: f64, _x: &DVector<f64>) -> Result<DMatrix<f64>> {
        let (_, _, cov, cov_dot) = self.marginal_parts(t)?;
        let inv = linalg::inv_spd(&cov)?;
        Ok(0.5 * cov_dot * inv)
    }
}

/// Exact score s_t(x) = −Σ_t⁻¹ (x − m_t) for a Gaussian endpoint pair.
#[derive(Debug, Clone)]
pub struct GaussianScore {
    drift: GaussianDrift,
}

impl GaussianScore {
    pub fn new(mu0: GaussianMeasure, mu1: GaussianMeasure, schedule: Schedule) -> Result<Self> {
        Ok(GaussianScore { drift: GaussianDrift::new(mu0, mu1, schedule)? })
    }
}

impl ScoreField for GaussianScore {
    fn dim(&self) -> usize {
        self.drift.dim()
    }

    fn time_range(&self) -> (f64, f64) {
        (0.0, 1.0)
    }

    fn score(&self, t: f64, x: &DVector<f64>) -> Result<DVector<f64>> {
        let (m, _, cov, _) = self.drift.marginal_parts(t)?;
        let centered = x - &m;
        Ok(-linalg::solve_spd(&cov, &centered)?)
    }
}
