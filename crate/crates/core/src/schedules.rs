//! Interpolation schedules (α_t, β_t).
//!
//! A schedule is a pair of smooth positive functions on (0, 1) with
//!
//! ```text
//!     alpha(0) = 1,  alpha(1) = 0,      beta(0) = 0,  beta(1) = 1,
//! ```
//!
//! defining the interpolation X_t = alpha_t X_0 + beta_t X_1 between a base
//! and a target measure. Derivatives are carried alongside the values because
//! every drift formula consumes all four numbers at once.
//!
//! Built-ins:
//!
//! * `linear`            — (1 − t, t)
//! * `trig`              — (cos(πt/2), sin(πt/2)); satisfies α² + β² = 1
//! * `variance_matched`  — α_t² = (κ^{1−t} − 1)/(κ − 1), β² = 1 − α²; keeps
//!   κα_t² + β_t² = κ^{1−t} for a Gaussian target of curvature κ
//! * `ou_reparam`        — (e^{−τ}, sqrt(1 − e^{−2τ})) with τ = t/(1 − t),
//!   the Ornstein–Uhlenbeck noising path mapped to unit time; τ is clamped at
//!   t = 1 − δ with δ = `TIME_CLAMP` (α(1) then underflows to 0 exactly)
//!
//! The square-root shapes mean β̇ diverges like t^{−1/2} at t = 0 for the
//! variance-matched and OU schedules (and α̇ at t = 1); `eval` reports the
//! honest ±∞ there. Endpoint *values* are exact for every built-in.
//!
//! A schedule is *admissible* when α² + β² ≡ 1 and α is strictly decreasing;
//! the sharper non-Gaussian contraction rates in `bounds` assume it.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::TIME_CLAMP;

/// Endpoint-value residual allowed for a valid schedule.
pub const ENDPOINT_TOL: f64 = 1e-12;
/// Allowed mismatch between analytic derivatives and centered differences.
pub const DERIVATIVE_FD_TOL: f64 = 1e-6;
/// Allowed |α² + β² − 1| for an admissible schedule.
pub const ADMISSIBLE_UNIT_TOL: f64 = 1e-10;

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// (α, β) and their time derivatives at a fixed time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduleValues {
    pub alpha: f64,
    pub beta: f64,
    pub alpha_dot: f64,
    pub beta_dot: f64,
}

/// Built-in schedule selector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BuiltinSchedule {
    Linear,
    Trig,
    VarianceMatched(f64),
    OuReparam,
}

/// An interpolation schedule. Immutable after construction; cloning shares
/// the underlying functions, so instances can be passed freely across threads.
#[derive(Clone)]
pub struct Schedule {
    name: String,
    alpha: ScalarFn,
    beta: ScalarFn,
    alpha_dot: ScalarFn,
    beta_dot: ScalarFn,
}

impl fmt::Debug for Schedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Schedule").field("name", &self.name).finish()
    }
}

impl Schedule {
    /// Assemble a schedule from explicit functions. The constructor does not
    /// validate; run [`check_endpoints`] to get a per-condition report.
    pub fn from_fns(
        name: impl Into<String>,
        alpha: impl Fn(f64) -> f64 + Send + Sync + 'static,
        beta: impl Fn(f64) -> f64 + Send + Sync + 'static,
        alpha_dot: impl Fn(f64) -> f64 + Send + Sync + 'static,
        beta_dot: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Schedule {
            name: name.into(),
            alpha: Arc::new(alpha),
            beta: Arc::new(beta),
            alpha_dot: Arc::new(alpha_dot),
            beta_dot: Arc::new(beta_dot),
        }
    }

    pub fn builtin(kind: BuiltinSchedule) -> Result<Self> {
        match kind {
            BuiltinSchedule::Linear => Ok(Self::linear()),
            BuiltinSchedule::Trig => Ok(Self::trig()),
            BuiltinSchedule::VarianceMatched(kappa) => Self::variance_matched(kappa),
            BuiltinSchedule::OuReparam => Ok(Self::ou_reparam()),
        }
    }

    /// (1 − t, t).
    pub fn linear() -> Self {
        Schedule::from_fns("linear", |t| 1.0 - t, |t| t, |_| -1.0, |_| 1.0)
    }

    /// (cos(πt/2), sin(πt/2)); admissible.
    pub fn trig() -> Self {
        use std::f64::consts::FRAC_PI_2;
        Schedule::from_fns(
            "trig",
            |t| (FRAC_PI_2 * t).cos(),
            |t| (FRAC_PI_2 * t).sin(),
            |t| -FRAC_PI_2 * (FRAC_PI_2 * t).sin(),
            |t| FRAC_PI_2 * (FRAC_PI_2 * t).cos(),
        )
    }

    /// Variance-matched schedule for a Gaussian target of curvature `kappa`:
    /// α_t² = (κ^{1−t} − 1)/(κ − 1), β_t² = 1 − α_t². Along it,
    /// κ α_t² + β_t² = κ^{1−t} exactly, so the Gaussian contraction rate is
    /// constant in t. Requires κ > 0, κ ≠ 1 (κ = 1 degenerates to 0/0; use
    /// `trig` or any admissible schedule instead).
    pub fn variance_matched(kappa: f64) -> Result<Self> {
        if !(kappa > 0.0) || !kappa.is_finite() {
            return Err(Error::Parameter(format!(
                "variance_matched schedule needs kappa > 0, got {kappa}"
            )));
        }
        if kappa == 1.0 {
            return Err(Error::Parameter(
                "variance_matched schedule is undefined at kappa = 1 (0/0); any admissible schedule already has a constant rate there".into(),
            ));
        }
        let ln_k = kappa.ln();
        let denom = kappa - 1.0;
        // α² as a function of t; expm1 keeps it accurate for κ near 1.
        let usq = move |t: f64| ((1.0 - t) * ln_k).exp_m1() / denom;
        let usq_dot = move |t: f64| -((1.0 - t) * ln_k).exp() * ln_k / denom;
        Ok(Schedule::from_fns(
            format!("vm:{kappa}"),
            move |t| usq(t).max(0.0).sqrt(),
            move |t| (1.0 - usq(t)).max(0.0).sqrt(),
            move |t| {
                let a = usq(t).max(0.0).sqrt();
                0.5 * usq_dot(t) / a
            },
            move |t| {
                let b = (1.0 - usq(t)).max(0.0).sqrt();
                -0.5 * usq_dot(t) / b
            },
        ))
    }

    /// Ornstein–Uhlenbeck noising path in unit time, run target-to-base:
    /// α = e^{−τ}, β = sqrt(1 − e^{−2τ}), τ = t/(1 − t) clamped at
    /// t = 1 − `TIME_CLAMP`. Beyond the clamp τ is frozen, so derivatives
    /// vanish there; α(1) ≈ e^{−999} underflows to exactly 0.
    pub fn ou_reparam() -> Self {
        let hi = 1.0 - TIME_CLAMP;
        let tau = move |t: f64| {
            let tc = t.min(hi);
            tc / (1.0 - tc)
        };
        Schedule::from_fns(
            "ou",
            move |t| (-tau(t)).exp(),
            move |t| (-(-2.0 * tau(t)).exp_m1()).sqrt(),
            move |t| {
                if t > hi {
                    return 0.0;
                }
                let tp = 1.0 / ((1.0 - t) * (1.0 - t));
                -tp * (-tau(t)).exp()
            },
            move |t| {
                if t > hi {
                    return 0.0;
                }
                let tp = 1.0 / ((1.0 - t) * (1.0 - t));
                let e2 = (-2.0 * tau(t)).exp();
                tp * e2 / (-(-2.0 * tau(t)).exp_m1()).sqrt()
            },
        )
    }

    /// Polynomial schedule α(t) = Σ aᵢ tⁱ, β(t) = Σ bᵢ tⁱ with analytic
    /// derivatives. Mostly useful for configs and for exercising validation.
    pub fn from_polynomials(alpha_coeffs: Vec<f64>, beta_coeffs: Vec<f64>) -> Self {
        fn horner(c: &[f64], t: f64) -> f64 {
            c.iter().rev().fold(0.0, |acc, &ci| acc * t + ci)
        }
        fn deriv(c: &[f64]) -> Vec<f64> {
            c.iter()
                .enumerate()
                .skip(1)
                .map(|(i, &ci)| ci * i as f64)
                .collect()
        }
        let da = deriv(&alpha_coeffs);
        let db = deriv(&beta_coeffs);
        let (a, b) = (alpha_coeffs, beta_coeffs);
        Schedule::from_fns(
            "poly",
            move |t| horner(&a, t),
            move |t| horner(&b, t),
            move |t| horner(&da, t),
            move |t| horner(&db, t),
        )
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// All four schedule quantities at time `t ∈ [0, 1]`.
    pub fn eval(&self, t: f64) -> Result<ScheduleValues> {
        // Accept round-off overshoot from fixed-step integrators whose last
        // stage lands at 1 + O(ulp), but reject anything materially outside.
        const SLACK: f64 = 1e-9;
        if !t.is_finite() || t < -SLACK || t > 1.0 + SLACK {
            return Err(Error::Domain(format!("schedule time {t} outside [0, 1]")));
        }
        let t = t.clamp(0.0, 1.0);
        Ok(ScheduleValues {
            alpha: (self.alpha)(t),
            beta: (self.beta)(t),
            alpha_dot: (self.alpha_dot)(t),
            beta_dot: (self.beta_dot)(t),
        })
    }

    pub fn alpha(&self, t: f64) -> f64 {
        (self.alpha)(t)
    }

    pub fn beta(&self, t: f64) -> f64 {
        (self.beta)(t)
    }

    pub fn alpha_dot(&self, t: f64) -> f64 {
        (self.alpha_dot)(t)
    }

    pub fn beta_dot(&self, t: f64) -> f64 {
        (self.beta_dot)(t)
    }
}

// ═══════════════════════════════════════════════════════════════════════
// Validation
// ═══════════════════════════════════════════════════════════════════════

/// One validated clause of the schedule contract.
#[derive(Debug, Clone, serde::Serialize)]
pub struct ConditionCheck {
    pub name: String,
    pub residual: f64,
    pub pass: bool,
}

/// Outcome of [`check_endpoints`]: one entry per contract clause.
#[derive(Debug, Clone, serde::Serialize)]
pub struct EndpointReport {
    pub schedule: String,
    pub conditions: Vec<ConditionCheck>,
    pub pass: bool,
}

impl EndpointReport {
    /// The names of the clauses that failed, for error messages.
    pub fn failed_clauses(&self) -> Vec<&str> {
        self.conditions
            .iter()
            .filter(|c| !c.pass)
            .map(|c| c.name.as_str())
            .collect()
    }
}

/// Validate the endpoint values, interior positivity, and analytic-derivative
/// consistency of a schedule on a `grid`-point uniform time grid.
///
/// Endpoint values must match to [`ENDPOINT_TOL`]; α and β must be strictly
/// positive at interior grid points; and the analytic derivatives must match
/// centered finite differences (step 1e−6, residual relative to
/// max(1, |analytic|)) within [`DERIVATIVE_FD_TOL`] at interior grid points.
/// Endpoints are excluded from the derivative comparison: the square-root
/// schedules have infinite one-sided derivatives there and no finite
/// difference is meaningful.
pub fn check_endpoints(schedule: &Schedule, grid: usize) -> Result<EndpointReport> {
    if grid < 3 {
        return Err(Error::Parameter(format!("endpoint check needs a grid of ≥ 3 points, got {grid}")));
    }
    let mut conditions = Vec::new();
    let mut endpoint = |name: &str, value: f64, target: f64| {
        let residual = (value - target).abs();
        conditions.push(ConditionCheck {
            name: name.to_string(),
            residual,
            pass: residual <= ENDPOINT_TOL,
        });
    };
    endpoint("alpha(0) = 1", schedule.alpha(0.0), 1.0);
    endpoint("beta(0) = 0", schedule.beta(0.0), 0.0);
    endpoint("alpha(1) = 0", schedule.alpha(1.0), 0.0);
    endpoint("beta(1) = 1", schedule.beta(1.0), 1.0);

    let n = grid - 1;
    let interior: Vec<f64> = (1..n).map(|i| i as f64 / n as f64).collect();

    let mut min_alpha = f64::INFINITY;
    let mut min_beta = f64::INFINITY;
    for &t in &interior {
        min_alpha = min_alpha.min(schedule.alpha(t));
        min_beta = min_beta.min(schedule.beta(t));
    }
    conditions.push(ConditionCheck {
        name: "alpha > 0 on (0, 1)".into(),
        residual: (-min_alpha).max(0.0),
        pass: min_alpha > 0.0,
    });
    conditions.push(ConditionCheck {
        name: "beta > 0 on (0, 1)".into(),
        residual: (-min_beta).max(0.0),
        pass: min_beta > 0.0,
    });

    let h = 1e-6;
    let fd_residual = |f: &dyn Fn(f64) -> f64, df: &dyn Fn(f64) -> f64| -> f64 {
        interior
            .iter()
            .map(|&t| {
                let fd = (f(t + h) - f(t - h)) / (2.0 * h);
                let an = df(t);
                (an - fd).abs() / an.abs().max(1.0)
            })
            .fold(0.0_f64, f64::max)
    };
    let ra = fd_residual(&|t| schedule.alpha(t), &|t| schedule.alpha_dot(t));
    let rb = fd_residual(&|t| schedule.beta(t), &|t| schedule.beta_dot(t));
    conditions.push(ConditionCheck {
        name: "alpha_dot matches finite differences".into(),
        residual: ra,
        pass: ra <= DERIVATIVE_FD_TOL,
    });
    conditions.push(ConditionCheck {
        name: "beta_dot matches finite differences".into(),
        residual: rb,
        pass: rb <= DERIVATIVE_FD_TOL,
    });

    let pass = conditions.iter().all(|c| c.pass);
    Ok(EndpointReport { schedule: schedule.name().to_string(), conditions, pass })
}

/// Outcome of [`check_admissible`].
#[derive(Debug, Clone, serde::Serialize)]
pub struct AdmissibilityReport {
    pub schedule: String,
    pub admissible: bool,
    /// Worst |α² + β² − 1| over the grid and the time where it occurs.
    pub worst_unit_residual: f64,
    pub worst_unit_t: f64,
    /// Largest α̇ over interior grid points (must be < 0) and its location.
    pub max_alpha_dot: f64,
    pub max_alpha_dot_t: f64,
}

/// A schedule is admissible when α² + β² = 1 (within
/// [`ADMISSIBLE_UNIT_TOL`]) on the whole grid and α is strictly decreasing
/// (α̇ < 0 at every interior grid point).
pub fn check_admissible(schedule: &Schedule, grid: usize) -> Result<AdmissibilityReport> {
    if grid < 3 {
        return Err(Error::Parameter(format!("admissibility check needs a grid of ≥ 3 points, got {grid}")));
    }
    let n = grid - 1;
    let mut worst_unit_residual = 0.0_f64;
    let mut worst_unit_t = 0.0_f64;
    let mut max_alpha_dot = f64::NEG_INFINITY;
    let mut max_alpha_dot_t = 0.0_f64;
    for i in 0..=n {
        let t = i as f64 / n as f64;
        let a = schedule.alpha(t);
        let b = schedule.beta(t);
        let resid = (a * a + b * b - 1.0).abs();
        if resid > worst_unit_residual {
            worst_unit_residual = resid;
            worst_unit_t = t;
        }
        if i > 0 && i < n {
            let ad = schedule.alpha_dot(t);
            if ad > max_alpha_dot {
                max_alpha_dot = ad;
                max_alpha_dot_t = t;
            }
        }
    }
    Ok(AdmissibilityReport {
        schedule: schedule.name().to_string(),
        admissible: worst_unit_residual <= ADMISSIBLE_UNIT_TOL && max_alpha_dot < 0.0,
        worst_unit_residual,
        worst_unit_t,
        max_alpha_dot,
        max_alpha_dot_t,
    })
}
