//! Flow-map integration, variational (Jacobian) dynamics, and the
//! ε-interpolated SDE family.
//!
//! The transport ODE
//!
//! ```text
//!     ∂_t f_t(x) = v_t(f_t(x)),      f_{t₀}(x) = x,
//! ```
//!
//! pushes the base onto the interpolated marginals, μ_t = (f_t)_# μ₀. Its
//! linearization along a trajectory obeys the variational equation
//!
//! ```text
//!     d/dt Df_t(x) = Dv_t(f_t(x)) · Df_t(x),      Df_{t₀} = I,
//! ```
//!
//! so the state and Jacobian are co-integrated with the same classical
//! fixed-step fourth-order Runge–Kutta scheme: the drift is smooth on the
//! clamped range, a fixed grid keeps the pair consistent, and reproducibility
//! is trivial. The grid covers exactly the backend's valid time range — a
//! quadrature backend integrates over [δ, 1−δ] and reports its endpoint at
//! 1−δ rather than hiding extrapolation inside the results.
//!
//! The same marginals are sampled stochastically by the family
//!
//! ```text
//!     dX_t = [ v_t(X_t) + (1−ε) s_t(X_t) ] dt + sqrt(2(1−ε)) dW_t,
//! ```
//!
//! where s_t = ∇ log μ_t: adding a score drift and the matching diffusion
//! leaves the Fokker–Planck marginals unchanged. ε = 1 is the deterministic
//! flow (stepped with the *same* RK4 kernel, so trajectories coincide bit for
//! bit with `integrate_flow`); ε = 0 is the fully stochastic version with
//! diffusion √2. Euler–Maruyama noise comes from a counter-based generator
//! keyed by (seed, path, step, coordinate), so results are independent of
//! scheduling and evaluation order.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::drift::{DriftField, ScoreField};
use crate::error::{Error, Result};
use crate::linalg::spectral_norm;
use crate::measures::SampleSet;
use crate::noise::indexed_normal;

/// States beyond this norm abort integration with a divergence error.
const DIVERGENCE_NORM: f64 = 1e12;

/// A trajectory of the flow ODE on a uniform grid, with optional variational
/// (Jacobian) data. `op_norms` holds the spectral norm of each Jacobian and
/// is present exactly when `jacobians` is.
#[derive(Debug, Clone)]
pub struct FlowResult {
    pub times: Vec<f64>,
    pub states: Vec<DVector<f64>>,
    pub jacobians: Option<Vec<DMatrix<f64>>>,
    pub op_norms: Option<Vec<f64>>,
}

impl FlowResult {
    pub fn dim(&self) -> usize {
        self.states.first().map_or(0, |s| s.len())
    }

    pub fn endpoint_time(&self) -> f64 {
        *self.times.last().expect("non-empty grid")
    }

    pub fn endpoint_state(&self) -> &DVector<f64> {
        self.states.last().expect("non-empty grid")
    }

    pub fn endpoint_jacobian(&self) -> Option<&DMatrix<f64>> {
        self.jacobians.as_ref().map(|j| j.last().expect("non-empty grid"))
    }
}

/// One classical RK4 step of the state equation. Shared by the ODE
/// integrator and the ε = 1 branch of the SDE sampler so the two produce
/// identical floating-point trajectories on identical grids.
fn rk4_step(drift: &dyn DriftField, t: f64, x: &DVector<f64>, h: f64) -> Result<DVector<f64>> {
    let k1 = drift.velocity(t, x)?;
    let k2 = drift.velocity(t + 0.5 * h, &(x + 0.5 * h * &k1))?;
    let k3 = drift.velocity(t + 0.5 * h, &(x + 0.5 * h * &k2))?;
    let k4 = drift.velocity(t + h, &(x + h * &k3))?;
    Ok(x + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4))
}

/// One RK4 step of the joint (state, Jacobian) system.
fn rk4_step_joint(
    drift: &dyn DriftField,
    t: f64,
    x: &DVector<f64>,
    jac: &DMatrix<f64>,
    h: f64,
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let k1x = drift.velocity(t, x)?;
    let k1j = drift.jacobian(t, x)? * jac;

    let x2 = x + 0.5 * h * &k1x;
    let j2 = jac + 0.5 * h * &k1j;
    let k2x = drift.velocity(t + 0.5 * h, &x2)?;
    let k2j = drift.jacobian(t + 0.5 * h, &x2)? * j2;

    let x3 = x + 0.5 * h * &k2x;
    let j3 = jac + 0.5 * h * &k2j;
    let k3x = drift.velocity(t + 0.5 * h, &x3)?;
    let k3j = drift.jacobian(t + 0.5 * h, &x3)? * j3;

    let x4 = x + h * &k3x;
    let j4 = jac + h * &k3j;
    let k4x = drift.velocity(t + h, &x4)?;
    let k4j = drift.jacobian(t + h, &x4)? * j4;

    let nx = x + h / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
    let nj = jac + h / 6.0 * (k1j + 2.0 * k2j + 2.0 * k3j + k4j);
    Ok((nx, nj))
}

fn check_finite(step: usize, x: &DVector<f64>) -> Result<()> {
    if x.iter().all(|v| v.is_finite()) && x.norm() <= DIVERGENCE_NORM {
        Ok(())
    } else {
        Err(Error::Divergence {
            step,
            message: format!("state left the finite region (|x| = {:.3e})", x.norm()),
        })
    }
}

/// Integrate the flow ODE (and optionally the variational equation) with
/// fixed-step RK4 on a uniform grid spanning the backend's valid time range.
pub fn integrate_flow(
    drift: &dyn DriftField,
    x0: &DVector<f64>,
    n_steps: usize,
    with_jacobian: bool,
) -> Result<FlowResult> {
    if n_steps < 10 {
        return Err(Error::Parameter(format!("need at least 10 steps, got {n_steps}")));
    }
    if x0.len() != drift.dim() {
        return Err(Error::Domain(format!(
            "initial point dimension {} does not match drift dimension {}",
            x0.len(),
            drift.dim()
        )));
    }
    let (lo, hi) = drift.time_range();
    let h = (hi - lo) / n_steps as f64;
    let d = drift.dim();

    let mut times = Vec::with_capacity(n_steps + 1);
    let mut states = Vec::with_capacity(n_steps + 1);
    let mut jacobians = with_jacobian.then(|| Vec::with_capacity(n_steps + 1));

    let mut x = x0.clone();
    let mut jac = DMatrix::<f64>::identity(d, d);
    times.push(lo);
    states.push(x.clone());
    if let Some(js) = jacobians.as_mut() {
        js.push(jac.clone());
    }

    for k in 0..n_steps {
        let t = lo + k as f64 * h;
        if with_jacobian {
            let (nx, nj) = rk4_step_joint(drift, t, &x, &jac, h)?;
            x = nx;
            jac = nj;
        } else {
            x = rk4_step(drift, t, &x, h)?;
        }
        check_finite(k + 1, &x)?;
        times.push(lo + (k + 1) as f64 * h);
        states.push(x.clone());
        if let Some(js) = jacobians.as_mut() {
            js.push(jac.clone());
        }
    }

    let op_norms = jacobians
        .as_ref()
        .map(|js| js.iter().map(spectral_norm).collect::<Vec<_>>());
    Ok(FlowResult { times, states, jacobians, op_norms })
}

/// Snapshot of the SDE ensemble at one checkpoint time (snapped to the
/// integration grid).
#[derive(Debug, Clone)]
pub struct SdeCheckpoint {
    pub time: f64,
    pub samples: SampleSet,
}

/// Simulate the ε-family by Euler–Maruyama from the rows of `x0_samples`.
///
/// `score` may be `None` only for ε = 1 (the deterministic member needs no
/// score and no noise; it is stepped with the shared RK4 kernel). Checkpoint
/// times are snapped to the nearest grid point; the final time is always
/// appended if not already requested.
pub fn sde_sample(
    drift: &dyn DriftField,
    score: Option<&dyn ScoreField>,
    eps: f64,
    x0_samples: &SampleSet,
    n_steps: usize,
    seed: u64,
    checkpoints: &[f64],
) -> Result<Vec<SdeCheckpoint>> {
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::Parameter(format!("epsilon must lie in [0, 1], got {eps}")));
    }
    if n_steps < 10 {
        return Err(Error::Parameter(format!("need at least 10 steps, got {n_steps}")));
    }
    if x0_samples.dim() != drift.dim() {
        return Err(Error::Domain(format!(
            "sample dimension {} does not match drift dimension {}",
            x0_samples.dim(),
            drift.dim()
        )));
    }
    let deterministic = eps == 1.0;
    if !deterministic && score.is_none() {
        return Err(Error::Parameter(
            "epsilon < 1 requires a score backend for the drift correction".into(),
        ));
    }
    if let Some(s) = score {
        if s.dim() != drift.dim() {
            return Err(Error::Domain("score dimension does not match drift dimension".into()));
        }
    }

    let (lo, hi) = drift.time_range();
    let h = (hi - lo) / n_steps as f64;

    // Snap checkpoints onto the grid; always record the endpoint.
    let mut ck_indices: Vec<usize> = Vec::with_capacity(checkpoints.len() + 1);
    for &tc in checkpoints {
        if !tc.is_finite() || tc < lo - 1e-9 || tc > hi + 1e-9 {
            return Err(Error::Parameter(format!(
                "checkpoint {tc} outside the integration range [{lo}, {hi}]"
            )));
        }
        let idx = ((tc - lo) / h).round().clamp(0.0, n_steps as f64) as usize;
        ck_indices.push(idx);
    }
    if ck_indices.last() != Some(&n_steps) {
        ck_indices.push(n_steps);
    }

    let n_paths = x0_samples.len();
    let d = drift.dim();
    let noise_scale = (2.0 * (1.0 - eps)).sqrt() * h.sqrt();

    // Each path walks independently, recording its checkpoint states. The
    // noise is positional, so the map below is deterministic under any
    // parallel schedule.
    let per_path: Vec<Vec<DVector<f64>>> = (0..n_paths)
        .into_par_iter()
        .map(|p| -> Result<Vec<DVector<f64>>> {
            let mut x = DVector::<f64>::zeros(d);
            for k in 0..d {
                x[k] = x0_samples.points[(p, k)];
            }
            let mut recorded = Vec::with_capacity(ck_indices.len());
            for (ci, &idx) in ck_indices.iter().enumerate() {
                if idx == 0 {
                    recorded.push((ci, x.clone()));
                }
            }
            for k in 0..n_steps {
                let t = lo + k as f64 * h;
                if deterministic {
                    x = rk4_step(drift, t, &x, h)?;
                } else {
                    let mut b = drift.velocity(t, &x)?;
                    let s = score.expect("checked above").score(t, &x)?;
                    b.axpy(1.0 - eps, &s, 1.0);
                    for c in 0..d {
                        x[c] += h * b[c]
                            + noise_scale * indexed_normal(seed, p as u64, k as u64, c as u64);
                    }
                }
                check_finite(k + 1, &x)?;
                for (ci, &idx) in ck_indices.iter().enumerate() {
                    if idx == k + 1 {
                        recorded.push((ci, x.clone()));
                    }
                }
            }
            recorded.sort_by_key(|&(ci, _)| ci);
            Ok(recorded.into_iter().map(|(_, x)| x).collect())
        })
        .collect::<Result<Vec<_>>>()?;

    let mut out = Vec::with_capacity(ck_indices.len());
    for (ci, &idx) in ck_indices.iter().enumerate() {
        let mut points = DMatrix::<f64>::zeros(n_paths, d);
        for (p, rec) in per_path.iter().enumerate() {
            for c in 0..d {
                points[(p, c)] = rec[ci][c];
            }
        }
        out.push(SdeCheckpoint {
            time: lo + idx as f64 * h,
            samples: SampleSet {
                points,
                seed,
                source: format!("sde eps={eps} steps={n_steps}"),
            },
        });
    }
    Ok(out)
}

/// Collect the endpoint states of flows that share a time grid into one
/// sample set (the pushforward of the initial ensemble through f).
pub fn pushforward(flows: &[FlowResult]) -> Result<SampleSet> {
    let first = flows
        .first()
        .ok_or_else(|| Error::Parameter("pushforward of an empty flow batch".into()))?;
    let d = first.dim();
    for (i, f) in flows.iter().enumerate() {
        if f.times.len() != first.times.len()
            || f.times
                .iter()
                .zip(&first.times)
                .any(|(a, b)| (a - b).abs() > 1e-15)
        {
            return Err(Error::Precondition(format!(
                "flow {i} does not share the common time grid"
            )));
        }
        if f.dim() != d {
            return Err(Error::Precondition(format!("flow {i} has mismatched dimension")));
        }
    }
    let mut points = DMatrix::<f64>::zeros(flows.len(), d);
    for (i, f) in flows.iter().enumerate() {
        let end = f.endpoint_state();
        for c in 0..d {
            points[(i, c)] = end[c];
        }
    }
    Ok(SampleSet { points, seed: 0, source: "pushforward".into() })
}

// ═══════════════════════════════════════════════════════════════════════════

#[cfg(test)]
mod tests {
    use super::*;
    use crate::drift::{GaussianDrift, GaussianScore, QuadratureConfig, QuadratureDrift};
    use crate::measures::{
        gaussian_interpolant_marginal, gaussian_ot_map, GaussianMeasure, PotentialDensity,
    };
    use crate::schedules::Schedule;
    use approx::assert_relative_eq;

    fn dv(vals: &[f64]) -> DVector<f64> {
        DVector::from_row_slice(vals)
    }

    fn contraction_drift(kappa: f64) -> GaussianDrift {
        GaussianDrift::new(
            GaussianMeasure::standard(1),
            GaussianMeasure::isotropic_with_curvature(1, kappa).unwrap(),
            Schedule::linear(),
        )
        .unwrap()
    }

    #[test]
    fn zero_drift_flow_is_identity_with_identity_jacobian() {
        let d = GaussianDrift::new(
            GaussianMeasure::standard(1),
            GaussianMeasure::standard(1),
            Schedule::trig(),
        )
        .unwrap();
        let res = integrate_flow(&d, &dv(&[1.3]), 50, true).unwrap();
        assert_eq!(res.times.len(), 51);
        assert_eq!(res.states[0][0], 1.3);
        assert_eq!(res.jacobians.as_ref().unwrap()[0][(0, 0)], 1.0);
        for (s, j) in res.states.iter().zip(res.jacobians.as_ref().unwrap()) {
            assert_relative_eq!(s[0], 1.3, epsilon = 1e-12);
            assert_relative_eq!(j[(0, 0)], 1.0, epsilon = 1e-12);
        }
        for w in res.op_norms.as_ref().unwrap() {
            assert_relative_eq!(*w, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn isotropic_contraction_reaches_half() {
        // κ = 4 ⇒ f₁(x) = κ^{-1/2} x = 0.5 x.
        let d = contraction_drift(4.0);
        let res = integrate_flow(&d, &dv(&[2.0]), 1000, true).unwrap();
        assert_relative_eq!(res.endpoint_state()[0], 1.0, max_relative = 1e-6);
        assert_relative_eq!(res.endpoint_jacobian().unwrap()[(0, 0)], 0.5, max_relative = 1e-6);
        // op_norms mirror the Jacobians.
        let last = res.op_norms.as_ref().unwrap().last().unwrap();
        assert_relative_eq!(*last, 0.5, max_relative = 1e-6);
    }

    #[test]
    fn commuting_gaussians_flow_to_the_transport_map() {
        let m0 = GaussianMeasure::new(
            dv(&[0.5, -0.2]),
            DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 0.8]),
        )
        .unwrap();
        // Target covariance a polynomial in the base's → they commute.
        let c1 = {
            let c0 = DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 0.8]);
            0.25 * &c0 * &c0 + 0.1 * DMatrix::identity(2, 2)
        };
        let m1 = GaussianMeasure::new(dv(&[-1.0, 0.4]), c1).unwrap();
        let ot = gaussian_ot_map(&m0, &m1).unwrap();
        let d = GaussianDrift::new(m0, m1, Schedule::linear()).unwrap();
        let x0 = dv(&[1.2, 0.1]);
        let res = integrate_flow(&d, &x0, 1000, false).unwrap();
        let want = ot.apply(&x0);
        for i in 0..2 {
            assert_relative_eq!(res.endpoint_state()[i], want[i], epsilon = 1e-3);
        }
    }

    #[test]
    fn rk4_endpoint_error_scales_at_fourth_order() {
        let d = contraction_drift(4.0);
        let exact = 0.5 * 2.0;
        let err = |steps: usize| {
            let res = integrate_flow(&d, &dv(&[2.0]), steps, false).unwrap();
            (res.endpoint_state()[0] - exact).abs()
        };
        // 40 → 80 steps sits in the asymptotic regime (coarser grids are
        // still pre-asymptotic for this drift and under-shoot 16x).
        let e1 = err(40);
        let e2 = err(80);
        let factor = e1 / e2;
        assert!(
            (8.0..=32.0).contains(&factor),
            "expected ~16x error reduction, got {factor} ({e1} -> {e2})"
        );
    }

    #[test]
    fn variational_jacobian_matches_endpoint_finite_differences() {
        // 2-d anisotropic Gaussian pair (commuting diagonals).
        let m0 = GaussianMeasure::new(dv(&[0.0, 0.0]), DMatrix::from_diagonal(&dv(&[1.0, 2.0])))
            .unwrap();
        let m1 = GaussianMeasure::new(dv(&[0.3, -0.1]), DMatrix::from_diagonal(&dv(&[0.5, 0.25])))
            .unwrap();
        let d = GaussianDrift::new(m0, m1, Schedule::linear()).unwrap();
        let x0 = dv(&[0.7, -0.4]);
        let res = integrate_flow(&d, &x0, 400, true).unwrap();
        let jac = res.endpoint_jacobian().unwrap().clone();

        let h = 1e-5;
        for j in 0..2 {
            let mut xp = x0.clone();
            let mut xm = x0.clone();
            xp[j] += h;
            xm[j] -= h;
            let fp = integrate_flow(&d, &xp, 400, false).unwrap();
            let fm = integrate_flow(&d, &xm, 400, false).unwrap();
            for i in 0..2 {
                let fd = (fp.endpoint_state()[i] - fm.endpoint_state()[i]) / (2.0 * h);
                assert!((jac[(i, j)] - fd).abs() <= 1e-4, "J[{i},{j}] {} vs {fd}", jac[(i, j)]);
            }
        }
    }

    #[test]
    fn gronwall_self_consistency_along_trajectory() {
        // ‖J_k‖ ≤ exp(∫₀^{t_k} λ̂) with λ̂ the running max of ‖Dv‖ along the
        // trajectory — an integrator sanity check, not a theorem test.
        let d = contraction_drift(4.0);
        let res = integrate_flow(&d, &dv(&[1.4]), 200, true).unwrap();
        let mut running_max = f64::NEG_INFINITY;
        let mut integral = 0.0;
        let mut prev_lambda = None::<f64>;
        for (k, t) in res.times.iter().enumerate() {
            let dv_norm = spectral_norm(&d.jacobian(*t, &res.states[k]).unwrap());
            running_max = running_max.max(dv_norm);
            if let Some(prev) = prev_lambda {
                let h = res.times[k] - res.times[k - 1];
                integral += 0.5 * h * (prev + running_max);
            }
            prev_lambda = Some(running_max);
            let bound = integral.exp() * (1.0 + 1e-6);
            let measured = res.op_norms.as_ref().unwrap()[k];
            assert!(measured <= bound, "step {k}: ‖J‖ = {measured} > bound {bound}");
        }
    }

    #[test]
    fn quadrature_backend_integrates_over_clamped_range() {
        let q = QuadratureDrift::gaussian_base(
            PotentialDensity::gaussian_scaled(4.0, 1).unwrap(),
            Schedule::linear(),
            QuadratureConfig::default(),
        )
        .unwrap();
        let res = integrate_flow(&q, &dv(&[2.0]), 200, false).unwrap();
        let (lo, hi) = DriftField::time_range(&q);
        assert_relative_eq!(res.times[0], lo, epsilon = 1e-15);
        assert_relative_eq!(res.endpoint_time(), hi, epsilon = 1e-15);
        // Endpoint ≈ κ^{-1/2}·x up to the O(δ) clamp effect.
        assert_relative_eq!(res.endpoint_state()[0], 1.0, max_relative = 2e-3);
    }

    #[test]
    fn divergent_field_reports_the_step() {
        struct Blowup;
        impl DriftField for Blowup {
            fn dim(&self) -> usize {
                1
            }
            fn time_range(&self) -> (f64, f64) {
                (0.0, 1.0)
            }
            fn velocity(&self, _t: f64, x: &DVector<f64>) -> Result<DVector<f64>> {
                Ok(dv(&[(1.0 + x[0] * x[0]) * 1e6]))
            }
            fn jacobian(&self, _t: f64, x: &DVector<f64>) -> Result<DMatrix<f64>> {
                Ok(DMatrix::from_element(1, 1, 2e6 * x[0]))
            }
        }
        match integrate_flow(&Blowup, &dv(&[1.0]), 50, false) {
            Err(Error::Divergence { step, .. }) => assert!(step >= 1),
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn step_count_and_dimension_preconditions() {
        let d = contraction_drift(4.0);
        assert!(matches!(
            integrate_flow(&d, &dv(&[1.0]), 9, false),
            Err(Error::Parameter(_))
        ));
        assert!(matches!(integrate_flow(&d, &dv(&[1.0, 2.0]), 50, false), Err(Error::Domain(_))));
    }

    // ─── SDE ───────────────────────────────────────────────────────────────

    #[test]
    fn deterministic_member_coincides_with_the_flow() {
        let d = contraction_drift(4.0);
        let x0 = GaussianMeasure::standard(1).sample(16, 99).unwrap();
        let a = sde_sample(&d, None, 1.0, &x0, 64, 1, &[]).unwrap();
        let b = sde_sample(&d, None, 1.0, &x0, 64, 2, &[]).unwrap();
        for p in 0..x0.len() {
            // Seed independence, bit for bit.
            assert_eq!(
                a.last().unwrap().samples.points[(p, 0)].to_bits(),
                b.last().unwrap().samples.points[(p, 0)].to_bits()
            );
            // And agreement with integrate_flow on the same grid.
            let flow = integrate_flow(&d, &dv(&[x0.points[(p, 0)]]), 64, false).unwrap();
            let got = a.last().unwrap().samples.points[(p, 0)];
            assert!((got - flow.endpoint_state()[0]).abs() <= 1e-12);
        }
    }

    #[test]
    fn epsilon_zero_matches_gaussian_marginal_at_half_time() {
        sde_marginal_check(0.0, 31);
    }

    #[test]
    fn epsilon_half_matches_gaussian_marginal_at_half_time() {
        sde_marginal_check(0.5, 77);
    }

    fn sde_marginal_check(eps: f64, seed: u64) {
        // Gaussian endpoints N(0,1) → N(0.8, 0.25), trig schedule; the t=0.5
        // ensemble must match the closed-form interpolated marginal within
        // Monte Carlo error.
        let m0 = GaussianMeasure::standard(1);
        let m1 = GaussianMeasure::scalar(0.8, 0.25).unwrap();
        let sch = Schedule::trig();
        let d = GaussianDrift::new(m0.clone(), m1.clone(), sch.clone()).unwrap();
        let sc = GaussianScore::new(m0.clone(), m1.clone(), sch.clone()).unwrap();
        let n = 20_000usize;
        let x0 = m0.sample(n, seed).unwrap();
        let out = sde_sample(&d, Some(&sc), eps, &x0, 400, seed, &[0.5]).unwrap();
        let snap = &out[0];
        assert_relative_eq!(snap.time, 0.5, epsilon = 1e-12);

        let marginal = gaussian_interpolant_marginal(&m0, &m1, &sch, 0.5).unwrap();
        let want_mean = marginal.mean()[0];
        let want_var = marginal.cov()[(0, 0)];
        let got_mean = snap.samples.mean()[0];
        let got_var = snap.samples.covariance()[(0, 0)];

        // 3 standard errors: SE(mean) = σ/√n, SE(var) ≈ σ²√(2/(n−1)).
        let se_mean = want_var.sqrt() / (n as f64).sqrt();
        let se_var = want_var * (2.0 / (n as f64 - 1.0)).sqrt();
        assert!(
            (got_mean - want_mean).abs() <= 3.0 * se_mean,
            "eps={eps}: mean {got_mean} vs {want_mean} (3se = {})",
            3.0 * se_mean
        );
        assert!(
            (got_var - want_var).abs() <= 3.0 * se_var,
            "eps={eps}: var {got_var} vs {want_var} (3se = {})",
            3.0 * se_var
        );
    }

    #[test]
    fn sde_parameter_validation() {
        let d = contraction_drift(4.0);
        let x0 = GaussianMeasure::standard(1).sample(4, 1).unwrap();
        assert!(matches!(
            sde_sample(&d, None, 1.5, &x0, 64, 0, &[]),
            Err(Error::Parameter(_))
        ));
        assert!(matches!(
            sde_sample(&d, None, 0.5, &x0, 64, 0, &[]),
            Err(Error::Parameter(_)) // missing score backend
        ));
        assert!(matches!(
            sde_sample(&d, None, 1.0, &x0, 64, 0, &[2.0]),
            Err(Error::Parameter(_)) // checkpoint outside range
        ));
    }

    // ─── Pushforward ───────────────────────────────────────────────────────

    #[test]
    fn pushforward_of_zero_drift_returns_the_inputs() {
        let d = GaussianDrift::new(
            GaussianMeasure::standard(1),
            GaussianMeasure::standard(1),
            Schedule::trig(),
        )
        .unwrap();
        let x0 = GaussianMeasure::standard(1).sample(32, 5).unwrap();
        let flows: Vec<FlowResult> = (0..x0.len())
            .map(|p| integrate_flow(&d, &dv(&[x0.points[(p, 0)]]), 50, false).unwrap())
            .collect();
        let out = pushforward(&flows).unwrap();
        for p in 0..x0.len() {
            assert_relative_eq!(out.points[(p, 0)], x0.points[(p, 0)], epsilon = 1e-12);
        }
    }

    #[test]
    fn pushforward_contraction_has_target_variance() {
        let d = contraction_drift(4.0);
        let n = 4000usize;
        let x0 = GaussianMeasure::standard(1).sample(n, 13).unwrap();
        let flows: Vec<FlowResult> = (0..n)
            .map(|p| integrate_flow(&d, &dv(&[x0.points[(p, 0)]]), 60, false).unwrap())
            .collect();
        let out = pushforward(&flows).unwrap();
        let var = out.covariance()[(0, 0)];
        let se = 0.25 * (2.0 / (n as f64 - 1.0)).sqrt();
        assert!((var - 0.25).abs() <= 3.0 * se, "variance {var} vs 0.25 (3se = {})", 3.0 * se);
    }

    #[test]
    fn pushforward_quartic_second_moment_matches_quadrature() {
        // Independent oracle: E[X₁²] under μ₁ ∝ exp(−V₁) computed directly
        // with a wide Gauss–Hermite rule (proposal N(0, 2)).
        let target = PotentialDensity::quartic_1d();
        let rule = crate::hermite::HermiteRule::new(128).unwrap();
        let s = std::f64::consts::SQRT_2; // proposal std
        let mut num = 0.0;
        let mut den = 0.0;
        for (&y, &lw) in rule.nodes.iter().zip(&rule.log_weights_shifted) {
            let x1 = s * std::f64::consts::SQRT_2 * y;
            let w = (lw - target.value(&dv(&[x1]))).exp();
            num += w * x1 * x1;
            den += w;
        }
        let want_m2 = num / den;

        let q = QuadratureDrift::gaussian_base(
            target,
            Schedule::trig(),
            QuadratureConfig::default(),
        )
        .unwrap();
        let n = 800usize;
        let x0 = GaussianMeasure::standard(1).sample(n, 23).unwrap();
        let flows: Vec<FlowResult> = (0..n)
            .map(|p| integrate_flow(&q, &dv(&[x0.points[(p, 0)]]), 150, false).unwrap())
            .collect();
        let out = pushforward(&flows).unwrap();
        let m2: f64 = (0..n).map(|p| out.points[(p, 0)].powi(2)).sum::<f64>() / n as f64;

        // 3 MC standard errors of the second moment, using the same rule for
        // the fourth moment.
        let mut num4 = 0.0;
        for (&y, &lw) in rule.nodes.iter().zip(&rule.log_weights_shifted) {
            let x1 = s * std::f64::consts::SQRT_2 * y;
            let w = (lw - q.target().value(&dv(&[x1]))).exp();
            num4 += w * x1.powi(4);
        }
        let m4 = num4 / den;
        let se = ((m4 - want_m2 * want_m2) / n as f64).sqrt();
        assert!(
            (m2 - want_m2).abs() <= 3.0 * se,
            "second moment {m2} vs {want_m2} (3se = {})",
            3.0 * se
        );
    }

    #[test]
    fn pushforward_rejects_mismatched_grids() {
        let d = contraction_drift(4.0);
        let a = integrate_flow(&d, &dv(&[1.0]), 50, false).unwrap();
        let b = integrate_flow(&d, &dv(&[1.0]), 60, false).unwrap();
        assert!(matches!(pushforward(&[a, b]), Err(Error::Precondition(_))));
    }
}
