//! Closed-form contraction rates and Lipschitz constants for interpolation
//! flows between log-concave endpoints.
//!
//! Two regimes are covered. With a standard-Gaussian base and a target whose
//! potential has Hessian ≽ κI, the velocity Jacobian obeys Dv_t ≼ λ_t I with
//!
//! ```text
//!     λ_t = (κ α_t α̇_t + β_t β̇_t) / (κ α_t² + β_t²)  =  ½ d/dt log(κα_t² + β_t²),
//! ```
//!
//! and the flow map contracts like ‖Df_t‖ ≤ √(α_t² + β_t²/κ) — exactly
//! exp(∫₀ᵗ λ) thanks to the logarithmic-derivative form. With both endpoints
//! bounded (base curvature in [κ₀, η₀], target curvature ≥ κ₁) and an
//! *admissible* schedule (α² + β² ≡ 1, α strictly decreasing), the operator
//! bound improves to
//!
//! ```text
//!     λ_t = (α̇_t α_t κ₁ + β̇_t β_t η₀) / √((α_t²κ₁ + β_t²η₀)(α_t²κ₁ + β_t²κ₀)),
//! ```
//!
//! which collapses to the first form when κ₀ = η₀ = 1. Integrated bounds use
//! Grönwall with a **positive** exponent, ‖Df_t‖ ≤ exp(∫₀ᵗ λ_s ds); the time
//! integral is a trapezoid rule on the supplied grid. At t = 1 the integral
//! form is dominated by the closed constant (η₀/κ₁)^{½√(η₀/κ₀)}, which in the
//! Gaussian-base case η₀ = κ₀ reduces to the classical √(η₀/κ₁) Lipschitz
//! constant of the optimal transport map.
//!
//! Only κ₁ — the lower curvature bound of the target — enters the second λ;
//! the target's upper bound η₁ plays no role in the rate and is not a
//! parameter here.
//!
//! The variance-matched schedule (κα² + β² = κ^{1−t}) makes the first λ
//! constant in t, equal to −½ log κ, so its uniform rate is ½|log κ|. One
//! quoted value for that constant in circulation is κ itself, which does not
//! match the formula; [`suggested_schedule_bound`] reports both and flags the
//! discrepancy rather than silently picking one.
//!
//! λ formulas need schedule *derivatives*, so for schedules with endpoint
//! derivative singularities (variance-matched, time-changed
//! Ornstein–Uhlenbeck) curves must be built on the clamped grid; α and β
//! themselves stay finite, so the closed flow bound √(α² + β²/κ) remains
//! evaluable everywhere.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::schedules::{check_admissible, Schedule, ScheduleValues};

/// Grid size used when an operation must verify admissibility internally.
const ADMISSIBILITY_GRID: usize = 101;

/// Smallest denominator the λ formulas accept before declaring the rate
/// undefined at that time.
const DENOM_FLOOR: f64 = 1e-14;

/// Which bound produced a curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundProvenance {
    Thm1,
    Thm2,
    Gronwall,
}

/// A contraction-rate curve λ_t with its integrated operator-norm bound on a
/// shared time grid. `flow_bound[0] = 1` whenever the grid starts where the
/// bound is anchored (t = 0, or the clamp margin for singular schedules —
/// the Grönwall form is exp of a running integral, so it is 1 at the grid
/// start by construction).
#[derive(Debug, Clone, Serialize)]
pub struct BoundCurve {
    pub times: Vec<f64>,
    pub lambda: Vec<f64>,
    pub flow_bound: Vec<f64>,
    pub provenance: BoundProvenance,
}

impl BoundCurve {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn endpoint_bound(&self) -> f64 {
        *self.flow_bound.last().expect("non-empty curve")
    }
}

/// Uniform grid of `n` points spanning [lo, hi].
pub fn uniform_time_grid(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(Error::Parameter(format!("a time grid needs at least 2 points, got {n}")));
    }
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::Parameter(format!("invalid grid range [{lo}, {hi}]")));
    }
    let step = (hi - lo) / (n - 1) as f64;
    Ok((0..n).map(|i| if i == n - 1 { hi } else { lo + i as f64 * step }).collect())
}

/// λ_t for the Gaussian-base bound at evaluated schedule values.
pub fn thm1_lambda_values(sv: &ScheduleValues, kappa: f64) -> Result<f64> {
    if !kappa.is_finite() || kappa < 0.0 {
        return Err(Error::Parameter(format!("kappa must be >= 0, got {kappa}")));
    }
    let denom = kappa * sv.alpha * sv.alpha + sv.beta * sv.beta;
    if denom <= DENOM_FLOOR {
        return Err(Error::Domain(format!(
            "lambda undefined: kappa*alpha^2 + beta^2 = {denom}"
        )));
    }
    Ok((kappa * sv.alpha * sv.alpha_dot + sv.beta * sv.beta_dot) / denom)
}

/// λ_t = (κ α α̇ + β β̇)/(κ α² + β²), the contraction rate for a
/// standard-Gaussian base and a target with curvature ≥ κ.
pub fn thm1_lambda(schedule: &Schedule, t: f64, kappa: f64) -> Result<f64> {
    thm1_lambda_values(&schedule.eval(t)?, kappa)
}

/// Closed-form operator bound √(α_t² + β_t²/κ) for the Gaussian-base case;
/// equals exp(∫₀ᵗ λ) identically.
pub fn thm1_flow_bound(schedule: &Schedule, t: f64, kappa: f64) -> Result<f64> {
    if !kappa.is_finite() || kappa <= 0.0 {
        return Err(Error::Domain(format!("flow bound needs kappa > 0, got {kappa}")));
    }
    let sv = schedule.eval(t)?;
    Ok((sv.alpha * sv.alpha + sv.beta * sv.beta / kappa).sqrt())
}

fn validate_thm2_params(kappa0: f64, eta0: f64, kappa1: f64) -> Result<()> {
    for (name, v) in [("kappa0", kappa0), ("eta0", eta0), ("kappa1", kappa1)] {
        if !v.is_finite() {
            return Err(Error::Parameter(format!("{name} must be finite, got {v}")));
        }
    }
    if kappa1 < 0.0 || kappa0 < kappa1 {
        return Err(Error::Parameter(format!(
            "need kappa0 >= kappa1 >= 0, got kappa0 = {kappa0}, kappa1 = {kappa1}"
        )));
    }
    if eta0 < kappa0 {
        return Err(Error::Parameter(format!(
            "need eta0 >= kappa0, got eta0 = {eta0}, kappa0 = {kappa0}"
        )));
    }
    Ok(())
}

/// λ_t for the two-sided bound at evaluated schedule values. Admissibility of
/// the schedule is the *caller's* precondition here; [`thm2_lambda`] checks
/// it.
pub fn thm2_lambda_values(
    sv: &ScheduleValues,
    kappa0: f64,
    eta0: f64,
    kappa1: f64,
) -> Result<f64> {
    validate_thm2_params(kappa0, eta0, kappa1)?;
    let a2 = sv.alpha * sv.alpha;
    let b2 = sv.beta * sv.beta;
    let denom = ((a2 * kappa1 + b2 * eta0) * (a2 * kappa1 + b2 * kappa0)).sqrt();
    if !(denom > DENOM_FLOOR) {
        return Err(Error::Domain(format!("lambda undefined: denominator = {denom}")));
    }
    Ok((sv.alpha_dot * sv.alpha * kappa1 + sv.beta_dot * sv.beta * eta0) / denom)
}

/// λ_t = (α̇ α κ₁ + β̇ β η₀)/√((α²κ₁ + β²η₀)(α²κ₁ + β²κ₀)) for base curvature
/// in [κ₀, η₀] and target curvature ≥ κ₁. Requires an admissible schedule
/// (α² + β² ≡ 1, α strictly decreasing); with κ₀ = η₀ = 1 it reduces to
/// [`thm1_lambda`].
pub fn thm2_lambda(
    schedule: &Schedule,
    t: f64,
    kappa0: f64,
    eta0: f64,
    kappa1: f64,
) -> Result<f64> {
    validate_thm2_params(kappa0, eta0, kappa1)?;
    let report = check_admissible(schedule, ADMISSIBILITY_GRID)?;
    if !report.admissible {
        return Err(Error::Precondition(format!(
            "schedule '{}' is not admissible (worst |alpha^2+beta^2-1| = {:.3e} at t = {:.3}, \
             max alpha_dot = {:.3e} at t = {:.3})",
            report.schedule,
            report.worst_unit_residual,
            report.worst_unit_t,
            report.max_alpha_dot,
            report.max_alpha_dot_t
        )));
    }
    thm2_lambda_values(&schedule.eval(t)?, kappa0, eta0, kappa1)
}

/// Trapezoid integral of a sampled curve from `times[0]` to `t` (linear
/// interpolation inside the final partial interval).
fn trapezoid_to(times: &[f64], values: &[f64], t: f64) -> Result<f64> {
    if times.len() != values.len() || times.len() < 2 {
        return Err(Error::Parameter("curve needs matching grids with >= 2 points".into()));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Parameter("curve times must be strictly increasing".into()));
    }
    let (lo, hi) = (times[0], *times.last().unwrap());
    if !(lo - 1e-12..=hi + 1e-12).contains(&t) {
        return Err(Error::Domain(format!("t = {t} outside the curve range [{lo}, {hi}]")));
    }
    let mut acc = 0.0;
    for k in 1..times.len() {
        if times[k] <= t {
            acc += 0.5 * (times[k] - times[k - 1]) * (values[k] + values[k - 1]);
            if times[k] == t {
                break;
            }
        } else {
            let t0 = times[k - 1];
            if t > t0 {
                let frac = (t - t0) / (times[k] - t0);
                let v_t = values[k - 1] + frac * (values[k] - values[k - 1]);
                acc += 0.5 * (t - t0) * (values[k - 1] + v_t);
            }
            break;
        }
    }
    Ok(acc)
}

/// Grönwall operator bound exp(∫_{t₀}^{t} λ_s ds) from a sampled λ curve
/// (positive exponent; trapezoid rule).
pub fn gronwall_flow_bound(times: &[f64], lambda: &[f64], t: f64) -> Result<f64> {
    Ok(trapezoid_to(times, lambda, t)?.exp())
}

/// Contraction-rate curve and closed-form flow bound for the Gaussian-base
/// regime on an explicit time grid.
pub fn thm1_curve(schedule: &Schedule, kappa: f64, times: &[f64]) -> Result<BoundCurve> {
    if times.len() < 2 {
        return Err(Error::Parameter("curve grid needs at least 2 points".into()));
    }
    let mut lambda = Vec::with_capacity(times.len());
    let mut flow_bound = Vec::with_capacity(times.len());
    for &t in times {
        lambda.push(thm1_lambda(schedule, t, kappa)?);
        flow_bound.push(thm1_flow_bound(schedule, t, kappa)?);
    }
    Ok(BoundCurve { times: times.to_vec(), lambda, flow_bound, provenance: BoundProvenance::Thm1 })
}

/// Contraction-rate curve for the two-sided regime; the flow bound is the
/// running Grönwall integral exp(∫ λ) anchored at the grid start.
/// Admissibility is checked once for the whole curve.
pub fn thm2_curve(
    schedule: &Schedule,
    kappa0: f64,
    eta0: f64,
    kappa1: f64,
    times: &[f64],
) -> Result<BoundCurve> {
    if times.len() < 2 {
        return Err(Error::Parameter("curve grid needs at least 2 points".into()));
    }
    validate_thm2_params(kappa0, eta0, kappa1)?;
    let report = check_admissible(schedule, ADMISSIBILITY_GRID)?;
    if !report.admissible {
        return Err(Error::Precondition(format!(
            "schedule '{}' is not admissible",
            report.schedule
        )));
    }
    let mut lambda = Vec::with_capacity(times.len());
    for &t in times {
        lambda.push(thm2_lambda_values(&schedule.eval(t)?, kappa0, eta0, kappa1)?);
    }
    let mut flow_bound = Vec::with_capacity(times.len());
    let mut acc = 0.0;
    flow_bound.push(1.0);
    for k in 1..times.len() {
        acc += 0.5 * (times[k] - times[k - 1]) * (lambda[k] + lambda[k - 1]);
        flow_bound.push(acc.exp());
    }
    Ok(BoundCurve { times: times.to_vec(), lambda, flow_bound, provenance: BoundProvenance::Thm2 })
}

/// Integrated Lipschitz constant (η₀/κ₁)^{½√(η₀/κ₀)} for the full transport
/// map in the two-sided regime. With η₀ = κ₀ this is √(η₀/κ₁).
pub fn corollary_constant(kappa0: f64, eta0: f64, kappa1: f64) -> Result<f64> {
    if !kappa0.is_finite() || kappa0 <= 0.0 {
        return Err(Error::Domain(format!("corollary constant needs kappa0 > 0, got {kappa0}")));
    }
    if !kappa1.is_finite() || kappa1 <= 0.0 {
        return Err(Error::Domain(format!("corollary constant needs kappa1 > 0, got {kappa1}")));
    }
    if !eta0.is_finite() || eta0 < kappa0 {
        return Err(Error::Parameter(format!(
            "need eta0 >= kappa0, got eta0 = {eta0}, kappa0 = {kappa0}"
        )));
    }
    Ok((eta0 / kappa1).powf(0.5 * (eta0 / kappa0).sqrt()))
}

/// √(η₀/κ₁): Lipschitz constant of the optimal transport map between a base
/// with curvature ≤ η₀ and a target with curvature ≥ κ₁.
pub fn caffarelli_constant(eta0: f64, kappa1: f64) -> Result<f64> {
    if !kappa1.is_finite() || kappa1 <= 0.0 {
        return Err(Error::Domain(format!("needs kappa1 > 0, got {kappa1}")));
    }
    if !eta0.is_finite() || kappa1 > eta0 {
        return Err(Error::Domain(format!(
            "needs kappa1 <= eta0, got kappa1 = {kappa1}, eta0 = {eta0}"
        )));
    }
    Ok((eta0 / kappa1).sqrt())
}

/// Uniform contraction rate of the variance-matched schedule, with the
/// discrepancy between the formula value and a quoted value made explicit.
#[derive(Debug, Clone, Serialize)]
pub struct SuggestedScheduleBound {
    pub kappa: f64,
    /// sup_t |λ_t| over the clamped grid (λ is constant for this schedule,
    /// so this matches `closed_form` to grid accuracy).
    pub grid_supremum: f64,
    /// ½|log κ|, the formula value; use this one.
    pub closed_form: f64,
    /// The value κ sometimes quoted for this constant; kept for comparison.
    pub quoted_value: f64,
    pub note: String,
}

impl SuggestedScheduleBound {
    /// The bound to use in computations (the formula value).
    pub fn value(&self) -> f64 {
        self.closed_form
    }
}

/// Uniform-in-time rate |λ_t| of the variance-matched schedule with
/// parameter κ: the schedule satisfies κα_t² + β_t² = κ^{1−t}, making
/// λ_t ≡ −½ log κ, so the uniform bound is ½|log κ|.
pub fn suggested_schedule_bound(kappa: f64) -> Result<SuggestedScheduleBound> {
    if !kappa.is_finite() || kappa <= 0.0 || kappa == 1.0 {
        return Err(Error::Parameter(format!(
            "variance-matched schedule needs kappa > 0, kappa != 1, got {kappa}"
        )));
    }
    let schedule = Schedule::variance_matched(kappa)?;
    let clamp = crate::TIME_CLAMP;
    let grid = uniform_time_grid(clamp, 1.0 - clamp, 257)?;
    let mut sup = 0.0_f64;
    for &t in &grid {
        sup = sup.max(thm1_lambda(&schedule, t, kappa)?.abs());
    }
    let closed_form = 0.5 * kappa.ln().abs();
    Ok(SuggestedScheduleBound {
        kappa,
        grid_supremum: sup,
        closed_form,
        quoted_value: kappa,
        note: "uniform rate from the formula is (1/2)|log kappa|; the value kappa is also \
               quoted for this constant and does not match the formula"
            .into(),
    })
}
