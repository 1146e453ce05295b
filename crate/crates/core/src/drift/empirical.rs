//! Plug-in drift estimation from target samples.
//!
//! With a standard-Gaussian base, μ_t is the Gaussian smoothing of the pushed
//! target: μ_t = law(β X₁ + α Z). Given draws X₁⁽¹⁾, …, X₁⁽ⁿ⁾ ~ μ₁ the
//! kernel estimate is the mixture
//!
//! ```text
//!     μ̂_t(x) = (1/n) Σᵢ N(x; β X₁⁽ⁱ⁾, (α² + h) I),
//! ```
//!
//! with optional extra bandwidth h ≥ 0 on top of the intrinsic smoothing α².
//! The score is regularized away from the mixture's effective support,
//!
//! ```text
//!     ŝ_t(x) = ∇μ̂_t(x) / max(ε, μ̂_t(x)),
//! ```
//!
//! and converted to a drift through the same cumulant identity the exact
//! field satisfies:
//!
//! ```text
//!     v̂_t(x) = (α̇/α) x + (β̇ − α̇β/α)(α²/β)(ŝ_t(x) + x/α²).
//! ```
//!
//! All mixture sums run through a max-shifted log-sum-exp, so far tails give
//! harmless zero weights rather than 0/0. The Jacobian is a centered finite
//! difference of v̂ (the estimator is smooth, and the sample sums make an
//! analytic Hessian a poor trade).

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::measures::SampleSet;
use crate::schedules::Schedule;
use crate::TIME_CLAMP;

use super::DriftField;

/// Kernel-mixture drift estimator built from target samples.
#[derive(Debug, Clone)]
pub struct EmpiricalDrift {
    samples: SampleSet,
    schedule: Schedule,
    bandwidth: f64,
    density_floor: f64,
    time_clamp: f64,
}

impl EmpiricalDrift {
    /// `bandwidth` is the additional kernel variance h ≥ 0; `density_floor`
    /// is the score regularizer ε > 0.
    pub fn new(
        samples: SampleSet,
        schedule: Schedule,
        bandwidth: f64,
        density_floor: f64,
    ) -> Result<Self> {
        if samples.len() == 0 {
            return Err(Error::Parameter("estimator needs at least one sample".into()));
        }
        if !bandwidth.is_finite() || bandwidth < 0.0 {
            return Err(Error::Parameter(format!("bandwidth must be >= 0, got {bandwidth}")));
        }
        if !density_floor.is_finite() || density_floor <= 0.0 {
            return Err(Error::Parameter(format!(
                "density floor must be > 0, got {density_floor}"
            )));
        }
        Ok(EmpiricalDrift { samples, schedule, bandwidth, density_floor, time_clamp: TIME_CLAMP })
    }

    pub fn samples(&self) -> &SampleSet {
        &self.samples
    }

    pub fn schedule(&self) -> &Schedule {
        &self.schedule
    }

    /// Mixture density μ̂_t(x) and its spatial gradient ∇μ̂_t(x).
    pub fn mixture_density(&self, t: f64, x: &DVector<f64>) -> Result<(f64, DVector<f64>)> {
        let (log_mu, grad_over_mu, log_scale) = self.mixture_parts(t, x)?;
        // μ̂ = exp(log_mu); ∇μ̂ = μ̂ · (∇μ̂/μ̂). log_scale carries the shared
        // max shift so underflow to 0 is graceful.
        let mu = (log_mu + log_scale).exp();
        Ok((mu, mu * grad_over_mu))
    }

    /// Regularized score ŝ_t(x) = ∇μ̂ / max(ε, μ̂).
    pub fn regularized_score(&self, t: f64, x: &DVector<f64>) -> Result<DVector<f64>> {
        let (log_mu, grad_over_mu, log_scale) = self.mixture_parts(t, x)?;
        let log_density = log_mu + log_scale;
        if log_density >= self.density_floor.ln() {
            // μ̂ ≥ ε: the regularizer is inactive and ŝ = ∇μ̂/μ̂ directly.
            Ok(grad_over_mu)
        } else {
            let mu = log_density.exp();
            Ok(grad_over_mu * (mu / self.density_floor))
        }
    }

    /// Shared mixture computation: returns (log(Σᵢ wᵢ/n) − m, Σᵢ wᵢ gᵢ / Σᵢ wᵢ, m)
    /// where wᵢ are the (max-shifted) kernel weights, gᵢ the per-kernel score
    /// contributions, and m the max shift.
    fn mixture_parts(&self, t: f64, x: &DVector<f64>) -> Result<(f64, DVector<f64>, f64)> {
        if x.len() != self.samples.dim() {
            return Err(Error::Domain(format!(
                "point dimension {} does not match sample dimension {}",
                x.len(),
                self.samples.dim()
            )));
        }
        let sv = self.schedule.eval(t)?;
        let var = sv.alpha * sv.alpha + self.bandwidth;
        if !(var > 0.0) {
            return Err(Error::Domain(format!("kernel variance collapsed at t = {t}")));
        }
        let d = self.samples.dim();
        let n = self.samples.len();
        let log_norm = -0.5 * d as f64 * (2.0 * std::f64::consts::PI * var).ln();

        let mut running_max = f64::NEG_INFINITY;
        let mut den = 0.0_f64;
        let mut grad_acc = DVector::<f64>::zeros(d);
        let mut diff = DVector::<f64>::zeros(d);
        for i in 0..n {
            for k in 0..d {
                diff[k] = sv.beta * self.samples.points[(i, k)] - x[k];
            }
            let ell = log_norm - 0.5 * diff.norm_squared() / var;
            if ell > running_max {
                let r = (running_max - ell).exp();
                let r = if r.is_finite() { r } else { 0.0 };
                den *= r;
                grad_acc *= r;
                running_max = ell;
            }
            let w = (ell - running_max).exp();
            den += w;
            // ∇ₓ of the i-th kernel log-density is (βXᵢ − x)/var.
            grad_acc.axpy(w / var, &diff, 1.0);
        }
        if !(den > 0.0) || !running_max.is_finite() {
            return Err(Error::numeric(format!(
                "empirical mixture degenerated at t = {t}, x = {:?}",
                x.as_slice()
            )));
        }
        let log_mu = (den / n as f64).ln();
        let grad_over_mu = grad_acc / den;
        Ok((log_mu, grad_over_mu, running_max))
    }

    fn velocity_inner(&self, t: f64, x: &DVector<f64>) -> Result<DVector<f64>> {
        let sv = self.schedule.eval(t)?;
        let a = sv.alpha;
        let score = self.regularized_score(t, x)?;
        let grad_b = score + x / (a * a);
        Ok(sv.alpha_dot / a * x + (sv.beta_dot - sv.alpha_dot * sv.beta / a) * a * a / sv.beta * grad_b)
    }

    fn clamp_range(&self) -> (f64, f64) {
        (self.time_clamp, 1.0 - self.time_clamp)
    }
}

impl DriftField for EmpiricalDrift {
    fn dim(&self) -> usize {
        self.samples.dim()
    }

    fn time_range(&self) -> (f64, f64) {
        self.clamp_range()
    }

    fn velocity(&self, t: f64, x: &DVector<f64>) -> Result<DVector<f64>> {
        let (lo, hi) = self.clamp_range();
        if !t.is_finite() || t < 0.0 || t > 1.0 {
            return Err(Error::TimeClamp { t, lo: 0.0, hi: 1.0 });
        }
        if t < lo {
            let f0 = self.velocity_inner(lo, x)?;
            let f1 = self.velocity_inner(lo + self.time_clamp, x)?;
            Ok(&f0 + (f1 - &f0) * ((t - lo) / self.time_clamp))
        } else if t > hi {
            let f0 = self.velocity_inner(hi, x)?;
            let fm = self.velocity_inner(hi - self.time_clamp, x)?;
            Ok(&f0 + (&f0 - fm) * ((t - hi) / self.time_clamp))
        } else {
            self.velocity_inner(t, x)
        }
    }

    fn jacobian(&self, t: f64, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        let d = self.dim();
        let mut jac = DMatrix::zeros(d, d);
        let h = 1e-5 * (1.0 + x.norm());
        for j in 0..d {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[j] += h;
            xm[j] -= h;
            let vp = self.velocity(t, &xp)?;
            let vm = self.velocity(t, &xm)?;
            for i in 0..d {
                jac[(i, j)] = (vp[i] - vm[i]) / (2.0 * h);
            }
        }
        Ok(jac)
    }
}

impl super::ScoreField for EmpiricalDrift {
    fn dim(&self) -> usize {
        self.samples.dim()
    }

    fn time_range(&self) -> (f64, f64) {
        self.clamp_range()
    }

    fn score(&self, t: f64, x: &DVector<f64>) -> Result<DVector<f64>> {
        self.regularized_score(t, x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::drift::GaussianDrift;
    use crate::measures::GaussianMeasure;
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;

    fn dv(vals: &[f64]) -> DVector<f64> {
        DVector::from_row_slice(vals)
    }

    fn gaussian_samples(n: usize, seed: u64) -> SampleSet {
        GaussianMeasure::standard(1).sample(n, seed).unwrap()
    }

    #[test]
    fn log_sum_exp_matches_naive_for_moderate_inputs() {
        // For n = 100 comfortably scaled points the naive direct sum is
        // exact enough to serve as the oracle.
        let samples = gaussian_samples(100, 7);
        let est = EmpiricalDrift::new(samples.clone(), Schedule::trig(), 0.0, 1e-12).unwrap();
        let t = 0.5;
        let sv = Schedule::trig().eval(t).unwrap();
        let var = sv.alpha * sv.alpha;
        for &x in &[-1.5, 0.0, 0.8] {
            let mut naive = 0.0;
            let mut naive_grad = 0.0;
            for i in 0..samples.len() {
                let diff = sv.beta * samples.points[(i, 0)] - x;
                let k = (-0.5 * diff * diff / var).exp() / (2.0 * std::f64::consts::PI * var).sqrt();
                naive += k;
                naive_grad += k * diff / var;
            }
            naive /= samples.len() as f64;
            naive_grad /= samples.len() as f64;
            let (mu, grad) = est.mixture_density(t, &dv(&[x])).unwrap();
            assert_relative_eq!(mu, naive, max_relative = 1e-12);
            assert_relative_eq!(grad[0], naive_grad, max_relative = 1e-12, epsilon = 1e-300);
        }
    }

    #[test]
    fn far_tail_is_graceful() {
        // 500 kernels all ~e^{-60000} below the max would break a naive sum;
        // the shifted form keeps everything finite. Out there μ̂ underflows
        // to 0 < ε, so the floored score is exactly 0 (the regularizer kills
        // the tail pull rather than letting 0/0 produce NaN).
        let est = EmpiricalDrift::new(gaussian_samples(500, 3), Schedule::trig(), 0.0, 1e-12).unwrap();
        let s = est.regularized_score(0.5, &dv(&[250.0])).unwrap();
        assert!(s[0].is_finite());
        assert_eq!(s[0], 0.0);
        let v = est.velocity(0.5, &dv(&[250.0])).unwrap();
        assert!(v[0].is_finite());
        // Nearer the bulk the mixture is representable and the score still
        // points home.
        let s = est.regularized_score(0.5, &dv(&[12.0])).unwrap();
        assert!(s[0] < 0.0);
    }

    #[test]
    fn estimator_approaches_exact_drift_for_gaussian_target() {
        // μ₀ = μ₁ = N(0,1) ⇒ exact v ≡ 0; the estimator error at n = 10⁴
        // should be well inside 0.1 near the bulk.
        let est =
            EmpiricalDrift::new(gaussian_samples(10_000, 42), Schedule::trig(), 0.0, 1e-12).unwrap();
        for &t in &[0.25, 0.5, 0.75] {
            let v = est.velocity(t, &dv(&[0.5])).unwrap();
            assert!(v[0].abs() <= 0.1, "t={t}: {}", v[0]);
        }
    }

    #[test]
    fn estimator_tracks_shifted_target() {
        // μ₁ = N(2, 1): compare against the exact affine drift on a grid.
        let target = GaussianMeasure::scalar(2.0, 1.0).unwrap();
        let samples = target.sample(20_000, 11).unwrap();
        let est = EmpiricalDrift::new(samples, Schedule::trig(), 0.0, 1e-12).unwrap();
        let exact =
            GaussianDrift::new(GaussianMeasure::standard(1), target, Schedule::trig()).unwrap();
        for &t in &[0.3, 0.6] {
            for &x in &[0.0, 1.0, 2.0] {
                let xv = dv(&[x]);
                let ve = est.velocity(t, &xv).unwrap()[0];
                let vg = exact.velocity(t, &xv).unwrap()[0];
                assert!((ve - vg).abs() <= 0.15, "t={t} x={x}: {ve} vs {vg}");
            }
        }
    }

    #[test]
    fn single_sample_stays_finite() {
        let samples = SampleSet {
            points: DMatrix::from_row_slice(1, 1, &[0.7]),
            seed: 0,
            source: "fixed".into(),
        };
        let est = EmpiricalDrift::new(samples, Schedule::trig(), 0.0, 1e-12).unwrap();
        for &t in &[0.1, 0.5, 0.9] {
            for &x in &[-3.0, 0.0, 3.0] {
                let v = est.velocity(t, &dv(&[x])).unwrap();
                assert!(v[0].is_finite(), "t={t} x={x}");
            }
        }
        // One sample at x₁ = c behaves like target δ_c smoothed by α²:
        // E[X₁|x] = c exactly, so v = α̇(x − βc)/α + β̇c.
        let sv = Schedule::trig().eval(0.5).unwrap();
        let est = EmpiricalDrift::new(
            SampleSet {
                points: DMatrix::from_row_slice(1, 1, &[0.7]),
                seed: 0,
                source: "fixed".into(),
            },
            Schedule::trig(),
            0.0,
            1e-12,
        )
        .unwrap();
        let x = 0.4;
        let want = sv.alpha_dot * (x - sv.beta * 0.7) / sv.alpha + sv.beta_dot * 0.7;
        let got = est.velocity(0.5, &dv(&[x])).unwrap()[0];
        assert_relative_eq!(got, want, epsilon = 1e-9, max_relative = 1e-9);
    }

    #[test]
    fn density_floor_activates_in_the_tail() {
        let est = EmpiricalDrift::new(gaussian_samples(200, 5), Schedule::trig(), 0.0, 1e-6).unwrap();
        // Deep in the tail μ̂ << ε, so the floored score is ∇μ̂/ε ≈ 0 —
        // strongly damped relative to the unfloored −x/α²-scale pull.
        let s_floored = est.regularized_score(0.5, &dv(&[40.0])).unwrap();
        assert!(s_floored[0].abs() < 1e-100);
        // In the bulk the floor is inactive: same result with a huge floor
        // gap between the two runs.
        let est_tight =
            EmpiricalDrift::new(gaussian_samples(200, 5), Schedule::trig(), 0.0, 1e-300).unwrap();
        let a = est.regularized_score(0.5, &dv(&[0.3])).unwrap();
        let b = est_tight.regularized_score(0.5, &dv(&[0.3])).unwrap();
        assert_relative_eq!(a[0], b[0], epsilon = 1e-12);
    }

    #[test]
    fn bandwidth_widens_the_mixture() {
        let est0 = EmpiricalDrift::new(gaussian_samples(100, 9), Schedule::trig(), 0.0, 1e-12).unwrap();
        let est1 = EmpiricalDrift::new(gaussian_samples(100, 9), Schedule::trig(), 0.5, 1e-12).unwrap();
        let (mu0, _) = est0.mixture_density(0.5, &dv(&[4.0])).unwrap();
        let (mu1, _) = est1.mixture_density(0.5, &dv(&[4.0])).unwrap();
        assert!(mu1 > mu0, "wider kernels must put more mass in the tail");
    }

    #[test]
    fn jacobian_is_finite_difference_consistent() {
        let est = EmpiricalDrift::new(gaussian_samples(500, 21), Schedule::trig(), 0.0, 1e-12).unwrap();
        let x = dv(&[0.4]);
        let j = est.jacobian(0.5, &x).unwrap()[(0, 0)];
        let h = 1e-4;
        let vp = est.velocity(0.5, &dv(&[0.4 + h])).unwrap()[0];
        let vm = est.velocity(0.5, &dv(&[0.4 - h])).unwrap()[0];
        assert_relative_eq!(j, (vp - vm) / (2.0 * h), epsilon = 1e-4, max_relative = 1e-4);
    }

    #[test]
    fn parameter_validation() {
        let s = gaussian_samples(10, 1);
        assert!(EmpiricalDrift::new(s.clone(), Schedule::trig(), -0.1, 1e-12).is_err());
        assert!(EmpiricalDrift::new(s.clone(), Schedule::trig(), 0.0, 0.0).is_err());
        let empty = SampleSet { points: DMatrix::zeros(0, 1), seed: 0, source: "x".into() };
        assert!(EmpiricalDrift::new(empty, Schedule::trig(), 0.0, 1e-12).is_err());
    }
}
