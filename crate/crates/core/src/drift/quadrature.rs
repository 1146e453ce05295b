//! Quadrature evaluation of the drift for log-concave endpoints.
//!
//! Conditioning X_t = α X₀ + β X₁ on its own value makes every conditional
//! expectation a ratio of integrals over x₁ alone, because x₀ is determined:
//! x₀(x₁) = (x − β x₁)/α. With endpoint potentials V₀, V₁ the conditional
//! weight is
//!
//! ```text
//!     w(x₁) = exp(−V₀(x₀(x₁)) − V₁(x₁)),
//! ```
//!
//! and
//!
//! ```text
//!     v_t(x)  = ∫ (α̇ x₀(x₁) + β̇ x₁) w dx₁ / ∫ w dx₁.
//! ```
//!
//! For a standard-Gaussian base the weight contains the exact Gaussian factor
//! exp(−‖x − βx₁‖²/2α²), giving the cumulant-generating-function form
//!
//! ```text
//!     b_t(x) = log ∫ exp(−V₁(x₁) − (β²/2α²)‖x₁‖² + (β/α²)⟨x₁, x⟩) dx₁,
//!     v_t(x) = (α̇/α) x + (β̇ − α̇β/α)(α²/β) ∇b_t(x),
//!     Dv_t   = (α̇/α) I + (β̇ − α̇β/α)(β/α²) Cov[X₁ | X_t = x]   (symmetric PSD shift),
//! ```
//!
//! and the score identity ∇b_t(x) = s_t(x) + x/α², s_t = ∇ log μ_t.
//!
//! For a general base the Jacobian comes from the reparametrized potential
//! Ṽ_t(x, r) = V₀((β̇x − βr)/Δ) + V₁((αr − α̇x)/Δ), Δ = αβ̇ − α̇β, through
//!
//! ```text
//!     Dv_t(x) = Cov[ R,  −∇_x Ṽ_t(x, R) ],        R = α̇ x₀ + β̇ x₁,
//!     −∇_x Ṽ_t = (α̇ ∇V₁(x₁) − β̇ ∇V₀(x₀)) / Δ,
//! ```
//!
//! where the covariance is again over the conditional law (r ↔ x₁ is an
//! affine change of variables at fixed x, so the same quadrature weights
//! serve). This route does not assume a Gaussian base and its result is not
//! symmetric in general.
//!
//! Node placement: integrals are evaluated with a tensorized Gauss–Hermite
//! rule, re-centered at x/β with scale α/β once β/α ≥ `switch_ratio` (the
//! Gaussian factor then dominates), and against a standard-normal proposal
//! near t = 0 (the conditional is then essentially μ₁ itself). Log-weights
//! are accumulated with a running-max rescale, so only ratios of
//! well-scaled exponentials are ever formed.
//!
//! Evaluations are restricted to the clamped range [δ, 1 − δ]; inside the
//! margins [0, δ) and (1 − δ, 1] results are extrapolated linearly in t (the
//! field itself can diverge at the endpoints — β̇ for square-root schedules
//! at 0, the collapsing conditioning variance at 1).

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::hermite::HermiteRule;
use crate::measures::{Measure, PotentialDensity};
use crate::schedules::{Schedule, ScheduleValues};

use super::{DriftField, QuadratureConfig, QuadratureMode};

const ALPHA_FLOOR: f64 = 1e-300;
const WRONSKIAN_GUARD: f64 = 1e-12;

/// Conditional log-density (up to the x₁-independent normalizer) of X₁ given
/// X_t = x for a standard-Gaussian base:
/// −V₁(x₁) − (β²/2α²)‖x₁‖² + (β/α²)⟨x₁, x⟩.
pub fn conditional_log_density(
    target: &PotentialDensity,
    schedule: &Schedule,
    t: f64,
    x: &DVector<f64>,
    x1: &DVector<f64>,
) -> Result<f64> {
    let sv = schedule.eval(t)?;
    if sv.alpha < ALPHA_FLOOR {
        return Err(Error::Domain(format!(
            "conditioning variance collapsed (alpha = {} at t = {t})",
            sv.alpha
        )));
    }
    if x.len() != target.dim() || x1.len() != target.dim() {
        return Err(Error::Domain("point dimension does not match the density".into()));
    }
    let a2 = sv.alpha * sv.alpha;
    Ok(-target.value(x1) - 0.5 * sv.beta * sv.beta / a2 * x1.norm_squared()
        + sv.beta / a2 * x1.dot(x))
}

#[derive(Debug, Clone)]
enum Base {
    /// N(0, I): enables the cumulant (b_t) form, the score, and the
    /// symmetric covariance route for the Jacobian.
    StdGaussian,
    Potential(PotentialDensity),
}

/// Gauss–Hermite drift backend. See the module docs for the formulas.
#[derive(Debug, Clone)]
pub struct QuadratureDrift {
    base: Base,
    target: PotentialDensity,
    schedule: Schedule,
    config: QuadratureConfig,
    rule: HermiteRule,
    dim: usize,
}

struct Moments {
    /// log ∫ exp(−V₀ − V₁) dx₁ including the node-scale Jacobian.
    log_mass: f64,
    mean_x1: DVector<f64>,
    second_x1: Option<DMatrix<f64>>,
    mean_r: Option<DVector<f64>>,
    mean_g: Option<DVector<f64>>,
    cross_rg: Option<DMatrix<f64>>,
}

impl QuadratureDrift {
    /// Backend for a standard-Gaussian base N(0, I) and potential target.
    pub fn gaussian_base(
        target: PotentialDensity,
        schedule: Schedule,
        config: QuadratureConfig,
    ) -> Result<Self> {
        config.validate()?;
        let dim = target.dim();
        Self::check_dim(dim)?;
        let rule = HermiteRule::new(config.nodes_per_dim)?;
        Ok(QuadratureDrift { base: Base::StdGaussian, target, schedule, config, rule, dim })
    }

    /// Backend for an arbitrary log-concave base. A base that is exactly
    /// N(0, I) is detected and routed through the Gaussian-base machinery, so
    /// the cumulant form and the symmetric Jacobian stay available.
    pub fn new(
        base: &Measure,
        target: PotentialDensity,
        schedule: Schedule,
        config: QuadratureConfig,
    ) -> Result<Self> {
        config.validate()?;
        if base.dim() != target.dim() {
            return Err(Error::Domain(format!(
                "endpoint dimensions differ: {} vs {}",
                base.dim(),
                target.dim()
            )));
        }
        let dim = target.dim();
        Self::check_dim(dim)?;
        let base_kind = match base {
            Measure::Gaussian(g) if g.is_standard(1e-12) => Base::StdGaussian,
            other => Base::Potential(other.as_potential()),
        };
        let rule = HermiteRule::new(config.nodes_per_dim)?;
        Ok(QuadratureDrift { base: base_kind, target, schedule, config, rule, dim })
    }

    fn check_dim(dim: usize) -> Result<()> {
        if dim == 0 || dim > 3 {
            return Err(Error::Parameter(format!(
                "quadrature drift supports dimensions 1..=3, got {dim}"
            )));
        }
        Ok(())
    }

    pub fn schedule(&self) -> &Schedule {
        &self.schedule
    }

    pub fn target(&self) -> &PotentialDensity {
        &self.target
    }

    pub fn config(&self) -> &QuadratureConfig {
        &self.config
    }

    pub fn has_gaussian_base(&self) -> bool {
        matches!(self.base, Base::StdGaussian)
    }

    /// Valid (clamped) evaluation range; shared by the drift and score views.
    pub fn time_range(&self) -> (f64, f64) {
        self.clamp_range()
    }

    fn base_value(&self, x0: &DVector<f64>) -> f64 {
        match &self.base {
            Base::StdGaussian => 0.5 * x0.norm_squared(),
            Base::Potential(p) => p.value(x0),
        }
    }

    fn base_grad(&self, x0: &DVector<f64>) -> DVector<f64> {
        match &self.base {
            Base::StdGaussian => x0.clone(),
            Base::Potential(p) => p.grad(x0),
        }
    }

    fn clamp_range(&self) -> (f64, f64) {
        (self.config.time_clamp, 1.0 - self.config.time_clamp)
    }

    /// Node placement for the current (t, x): (center, scale, mode).
    fn placement(&self, sv: &ScheduleValues, x: &DVector<f64>) -> (DVector<f64>, f64, QuadratureMode) {
        let auto = if sv.beta / sv.alpha >= self.config.switch_ratio {
            QuadratureMode::HermiteCentered
        } else {
            QuadratureMode::BaseProposal
        };
        let mut mode = self.config.forced_mode.unwrap_or(auto);
        if mode == QuadratureMode::HermiteCentered && sv.beta < ALPHA_FLOOR {
            // A forced centered rule is meaningless at β = 0; fall back.
            mode = QuadratureMode::BaseProposal;
        }
        match mode {
            QuadratureMode::HermiteCentered => (x / sv.beta, sv.alpha / sv.beta, mode),
            QuadratureMode::BaseProposal => (DVector::zeros(self.dim), 1.0, mode),
        }
    }

    /// Visit every tensor-product multi-index.
    fn visit_nodes(&self, mut f: impl FnMut(&[usize])) {
        let n = self.rule.len();
        let d = self.dim;
        let mut idx = vec![0usize; d];
        loop {
            f(&idx);
            let mut k = 0;
            loop {
                idx[k] += 1;
                if idx[k] < n {
                    break;
                }
                idx[k] = 0;
                k += 1;
                if k == d {
                    return;
                }
            }
        }
    }

    /// Conditional moments at an interior time. `want_second` adds
    /// E[x₁x₁ᵀ]; `want_general` adds the (R, −∇ₓṼ) accumulators for the
    /// general-route Jacobian.
    fn conditional_moments(
        &self,
        t: f64,
        x: &DVector<f64>,
        want_second: bool,
        want_general: bool,
    ) -> Result<Moments> {
        if x.len() != self.dim {
            return Err(Error::Domain(format!(
                "point dimension {} does not match backend dimension {}",
                x.len(),
                self.dim
            )));
        }
        let sv = self.schedule.eval(t)?;
        if sv.alpha < ALPHA_FLOOR {
            return Err(Error::Domain(format!(
                "conditioning variance collapsed (alpha = {} at t = {t})",
                sv.alpha
            )));
        }
        let (center, scale, _) = self.placement(&sv, x);
        let sqrt2 = std::f64::consts::SQRT_2;

        let wronskian = sv.alpha * sv.beta_dot - sv.alpha_dot * sv.beta;
        if want_general && wronskian.abs() <= WRONSKIAN_GUARD {
            return Err(Error::Schedule(format!(
                "degenerate schedule at t = {t}: |alpha*beta_dot - alpha_dot*beta| = {:.3e}",
                wronskian.abs()
            )));
        }

        let d = self.dim;
        let mut running_max = f64::NEG_INFINITY;
        let mut den = 0.0_f64;
        let mut sum_x1 = DVector::<f64>::zeros(d);
        let mut sum_sec = if want_second { Some(DMatrix::<f64>::zeros(d, d)) } else { None };
        let mut sum_r = if want_general { Some(DVector::<f64>::zeros(d)) } else { None };
        let mut sum_g = if want_general { Some(DVector::<f64>::zeros(d)) } else { None };
        let mut sum_rg = if want_general { Some(DMatrix::<f64>::zeros(d, d)) } else { None };

        let mut x1 = DVector::<f64>::zeros(d);
        let mut x0 = DVector::<f64>::zeros(d);
        self.visit_nodes(|idx| {
            let mut log_w = 0.0;
            for (k, &j) in idx.iter().enumerate() {
                let y = self.rule.nodes[j];
                log_w += self.rule.log_weights_shifted[j];
                x1[k] = center[k] + sqrt2 * scale * y;
            }
            for k in 0..d {
                x0[k] = (x[k] - sv.beta * x1[k]) / sv.alpha;
            }
            let ell = log_w - self.base_value(&x0) - self.target.value(&x1);
            if !ell.is_finite() {
                if ell == f64::NEG_INFINITY {
                    return; // zero weight; skip
                }
                den = f64::NAN;
                return;
            }
            if ell > running_max {
                // Rescale existing accumulators to the new reference.
                let r = (running_max - ell).exp(); // may be 0 on the first node
                let r = if r.is_finite() { r } else { 0.0 };
                den *= r;
                sum_x1 *= r;
                if let Some(s) = sum_sec.as_mut() {
                    *s *= r;
                }
                if let Some(s) = sum_r.as_mut() {
                    *s *= r;
                }
                if let Some(s) = sum_g.as_mut() {
                    *s *= r;
                }
                if let Some(s) = sum_rg.as_mut() {
                    *s *= r;
                }
                running_max = ell;
            }
            let w = (ell - running_max).exp();
            den += w;
            sum_x1.axpy(w, &x1, 1.0);
            if let Some(s) = sum_sec.as_mut() {
                s.ger(w, &x1, &x1, 1.0);
            }
            if want_general {
                let r_vec = sv.alpha_dot * &x0 + sv.beta_dot * &x1;
                let g_vec = (sv.alpha_dot * self.target.grad(&x1) - sv.beta_dot * self.base_grad(&x0))
                    / wronskian;
                if let Some(s) = sum_r.as_mut() {
                    s.axpy(w, &r_vec, 1.0);
                }
                if let Some(s) = sum_g.as_mut() {
                    s.axpy(w, &g_vec, 1.0);
                }
                if let Some(s) = sum_rg.as_mut() {
                    s.ger(w, &r_vec, &g_vec, 1.0);
                }
            }
        });

        if !(den > 0.0) || !den.is_finite() || !running_max.is_finite() {
            return Err(Error::numeric(format!(
                "conditional quadrature degenerated at t = {t}, x = {:?} (mass {den})",
                x.as_slice()
            )));
        }

        let log_mass = running_max + den.ln() + d as f64 * (sqrt2 * scale).ln();
        let mean_x1 = &sum_x1 / den;
        let second_x1 = sum_sec.map(|s| s / den);
        let mean_r = sum_r.map(|s| s / den);
        let mean_g = sum_g.map(|s| s / den);
        let cross_rg = sum_rg.map(|s| s / den);
        Ok(Moments { log_mass, mean_x1, second_x1, mean_r, mean_g, cross_rg })
    }

    fn velocity_inner(&self, t: f64, x: &DVector<f64>) -> Result<DVector<f64>> {
        let sv = self.schedule.eval(t)?;
        let m = self.conditional_moments(t, x, false, false)?;
        let mean_x0 = (x - sv.beta * &m.mean_x1) / sv.alpha;
        Ok(sv.alpha_dot * mean_x0 + sv.beta_dot * m.mean_x1)
    }

    fn jacobian_inner(&self, t: f64, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        let sv = self.schedule.eval(t)?;
        match self.base {
            Base::StdGaussian => {
                let m = self.conditional_moments(t, x, true, false)?;
                let second = m.second_x1.expect("requested");
                let cov = second - &m.mean_x1 * m.mean_x1.transpose();
                let a = sv.alpha;
                let coeff = (sv.beta_dot - sv.alpha_dot * sv.beta / a) * sv.beta / (a * a);
                Ok(DMatrix::identity(self.dim, self.dim) * (sv.alpha_dot / a) + coeff * cov)
            }
            Base::Potential(_) => {
                let m = self.conditional_moments(t, x, false, true)?;
                let cross = m.cross_rg.expect("requested");
                let mean_r = m.mean_r.expect("requested");
                let mean_g = m.mean_g.expect("requested");
                Ok(cross - mean_r * mean_g.transpose())
            }
        }
    }

    /// Log-partition b_t(x) of the conditional density (Gaussian base only):
    /// log ∫ exp(−V₁(x₁) − (β²/2α²)‖x₁‖² + (β/α²)⟨x₁, x⟩) dx₁.
    /// Defined for 0 ≤ t ≤ 1 − δ; the upper margin is excluded because the
    /// linear coefficient β/α² blows up.
    pub fn log_partition(&self, t: f64, x: &DVector<f64>) -> Result<f64> {
        if !matches!(self.base, Base::StdGaussian) {
            return Err(Error::Unsupported(
                "the cumulant form b_t is defined relative to a standard-Gaussian base".into(),
            ));
        }
        let hi = 1.0 - self.config.time_clamp;
        if !t.is_finite() || t < 0.0 || t > hi {
            return Err(Error::TimeClamp { t, lo: 0.0, hi });
        }
        let sv = self.schedule.eval(t)?;
        let m = self.conditional_moments(t, x, false, false)?;
        Ok(m.log_mass + 0.5 * x.norm_squared() / (sv.alpha * sv.alpha))
    }

    /// Score s_t(x) = ∇ log μ_t(x) = (β/α²) E[X₁ | X_t = x] − x/α²
    /// (Gaussian base only). Same clamped range as the velocity.
    pub fn score(&self, t: f64, x: &DVector<f64>) -> Result<DVector<f64>> {
        if !matches!(self.base, Base::StdGaussian) {
            return Err(Error::Unsupported(
                "the conditional-mean score form assumes a standard-Gaussian base".into(),
            ));
        }
        self.clamped_eval(t, |s, tt| s.score_inner(tt, x))
    }

    fn score_inner(&self, t: f64, x: &DVector<f64>) -> Result<DVector<f64>> {
        let sv = self.schedule.eval(t)?;
        let m = self.conditional_moments(t, x, false, false)?;
        let a2 = sv.alpha * sv.alpha;
        Ok(sv.beta / a2 * m.mean_x1 - x / a2)
    }

    /// Scalar potential φ_t with ∇φ_t = v_t (Gaussian base only):
    /// φ_t(x) = (α̇/2α)‖x‖² + (β̇ − α̇β/α)(α²/β) b_t(x).
    /// Restricted to the clamped interior [δ, 1 − δ] where β > 0.
    pub fn potential_phi(&self, t: f64, x: &DVector<f64>) -> Result<f64> {
        let (lo, hi) = self.clamp_range();
        if !t.is_finite() || t < lo || t > hi {
            return Err(Error::TimeClamp { t, lo, hi });
        }
        let sv = self.schedule.eval(t)?;
        let b = self.log_partition(t, x)?;
        let a = sv.alpha;
        Ok(0.5 * sv.alpha_dot / a * x.norm_squared()
            + (sv.beta_dot - sv.alpha_dot * sv.beta / a) * a * a / sv.beta * b)
    }

    /// Run `f` at a clamped time, extrapolating linearly in t inside the
    /// excluded margins. Times outside [0, 1] are clamp errors.
    fn clamped_eval<T, F>(&self, t: f64, f: F) -> Result<T>
    where
        F: Fn(&Self, f64) -> Result<T>,
        T: std::ops::Add<T, Output = T> + std::ops::Sub<T, Output = T> + std::ops::Mul<f64, Output = T> + Clone,
    {
        let (lo, hi) = self.clamp_range();
        if !t.is_finite() || t < 0.0 || t > 1.0 {
            return Err(Error::TimeClamp { t, lo: 0.0, hi: 1.0 });
        }
        if t < lo {
            let step = self.config.time_clamp;
            let f0 = f(self, lo)?;
            let f1 = f(self, lo + step)?;
            let slope = (f1 - f0.clone()) * (1.0 / step);
            Ok(f0 + slope * (t - lo))
        } else if t > hi {
            let step = self.config.time_clamp;
            let f0 = f(self, hi)?;
            let fm = f(self, hi - step)?;
            let slope = (f0.clone() - fm) * (1.0 / step);
            Ok(f0 + slope * (t - hi))
        } else {
            f(self, t)
        }
    }
}

impl DriftField for QuadratureDrift {
    fn dim(&self) -> usize {
        self.dim
    }

    fn time_range(&self) -> (f64, f64) {
        self.clamp_range()
    }

    fn velocity(&self, t: f64, x: &DVector<f64>) -> Result<DVector<f64>> {
        self.clamped_eval(t, |s, tt| s.velocity_inner(tt, x))
    }

    fn jacobian(&self, t: f64, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        self.clamped_eval(t, |s, tt| s.jacobian_inner(tt, x))
    }
}

impl super::ScoreField for QuadratureDrift {
    fn dim(&self) -> usize {
        self.dim
    }

    fn time_range(&self) -> (f64, f64) {
        self.clamp_range()
    }

    fn score(&self, t: f64, x: &DVector<f64>) -> Result<DVector<f64>> {
        QuadratureDrift::score(self, t, x)
    }
}
