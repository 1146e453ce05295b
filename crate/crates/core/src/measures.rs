//! Endpoint measures: Gaussians, log-concave densities in potential form,
//! samplers, and the closed-form Gaussian transport map.
//!
//! A density in potential form is μ(dx) ∝ exp(−V(x)) dx with V smooth and
//!
//! ```text
//!     kappa · I  ≼  ∇²V(x)  ≼  eta · I        for all x,
//! ```
//!
//! where `eta` may be infinite when no upper bound is known (e.g. the quartic
//! well). The curvature window is what the contraction bounds consume; it is
//! declared by the caller and can be audited on a grid with
//! [`logconcavity_check`].
//!
//! Shipped densities (all centered, all with κ = 1 scale, so quadrature
//! against a standard-normal proposal resolves them):
//!
//! * `gaussian(mean, cov)` — via [`GaussianMeasure::to_potential`]
//! * `gaussian_scaled(kappa)` — V = κ‖x‖²/2, i.e. N(0, κ⁻¹ I)
//! * `quartic1d` — V = x²/2 + x⁴/4, κ = 1, η = ∞
//! * `logcosh1d` — V = x²/2 + log cosh x, κ = 1, η = 2
//!
//! Sampling: Gaussians sample exactly through a Cholesky factor; 1-d
//! potentials through inverse-CDF on an adaptive grid around the mode;
//! higher-dimensional potentials by rejection from N(mode, κ⁻¹ I), which
//! dominates exp(−V) pointwise because κ-strong convexity gives
//! V(x) ≥ V(mode) + κ‖x − mode‖²/2.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg;
use crate::schedules::Schedule;

type PotentialFn = Arc<dyn Fn(&DVector<f64>) -> f64 + Send + Sync>;
type GradFn = Arc<dyn Fn(&DVector<f64>) -> DVector<f64> + Send + Sync>;
type HessFn = Arc<dyn Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync>;

// ═══════════════════════════════════════════════════════════════════════
// Gaussian measures
// ═══════════════════════════════════════════════════════════════════════

/// A non-degenerate Gaussian N(mean, cov). The covariance is validated to be
/// symmetric (residual ≤ 1e−12) and positive definite at construction.
#[derive(Debug, Clone)]
pub struct GaussianMeasure {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
}

impl GaussianMeasure {
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        if cov.nrows() != cov.ncols() || cov.nrows() != mean.len() {
            return Err(Error::Domain(format!(
                "covariance is {}x{} but the mean has dimension {}",
                cov.nrows(),
                cov.ncols(),
                mean.len()
            )));
        }
        let asym = linalg::symmetry_residual(&cov);
        if asym > 1e-12 {
            return Err(Error::Domain(format!(
                "covariance is not symmetric (residual {asym:.3e})"
            )));
        }
        let min_eig = linalg::min_eigenvalue(&cov);
        if min_eig <= 0.0 {
            return Err(Error::Domain(format!(
                "covariance is not positive definite (min eigenvalue {min_eig:.3e})"
            )));
        }
        Ok(GaussianMeasure { mean, cov })
    }

    pub fn standard(dim: usize) -> Self {
        GaussianMeasure {
            mean: DVector::zeros(dim),
            cov: DMatrix::identity(dim, dim),
        }
    }

    /// N(0, κ⁻¹ I): the Gaussian whose potential has curvature exactly κ.
    pub fn isotropic_with_curvature(dim: usize, kappa: f64) -> Result<Self> {
        if !(kappa > 0.0) {
            return Err(Error::Parameter(format!("curvature must be positive, got {kappa}")));
        }
        Ok(GaussianMeasure {
            mean: DVector::zeros(dim),
            cov: DMatrix::identity(dim, dim) / kappa,
        })
    }

    pub fn scalar(mean: f64, variance: f64) -> Result<Self> {
        Self::new(DVector::from_element(1, mean), DMatrix::from_element(1, 1, variance))
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    pub fn is_standard(&self, tol: f64) -> bool {
        let id = DMatrix::<f64>::identity(self.dim(), self.dim());
        self.mean.amax() <= tol && (&self.cov - id).amax() <= tol
    }

    /// Exact sampling through the Cholesky factor of the covariance.
    pub fn sample(&self, n: usize, seed: u64) -> Result<SampleSet> {
        if n == 0 {
            return Err(Error::Parameter("sample count must be ≥ 1".into()));
        }
        let chol = self
            .cov
            .clone()
            .cholesky()
            .ok_or_else(|| Error::numeric("Cholesky factorization of the sampling covariance"))?;
        let l = chol.l();
        let d = self.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut points = DMatrix::zeros(n, d);
        let mut z = DVector::zeros(d);
        for i in 0..n {
            for k in 0..d {
                z[k] = rng.sample(StandardNormal);
            }
            let x = &self.mean + &l * &z;
            points.row_mut(i).copy_from(&x.transpose());
        }
        Ok(SampleSet { points, seed, source: "gaussian".into() })
    }

    /// Express the Gaussian as a potential: V(x) = ½ (x−m)ᵀ Σ⁻¹ (x−m),
    /// κ = 1/λ_max(Σ), η = 1/λ_min(Σ).
    pub fn to_potential(&self) -> PotentialDensity {
        let prec = linalg::inv_spd(&self.cov).expect("validated covariance is PD");
        let eigs = linalg::symmetric_eigenvalues(&self.cov);
        let kappa = 1.0 / eigs.last().copied().expect("non-empty");
        let eta = 1.0 / eigs[0];
        let mean = self.mean.clone();
        let prec_v = prec.clone();
        let prec_g = prec.clone();
        let mean_v = mean.clone();
        let mean_g = mean.clone();
        PotentialDensity::new(
            format!("gaussian(dim={})", self.dim()),
            self.dim(),
            move |x: &DVector<f64>| {
                let r = x - &mean_v;
                0.5 * (&prec_v * &r).dot(&r)
            },
            move |x: &DVector<f64>| &prec_g * (x - &mean_g),
            move |_: &DVector<f64>| prec.clone(),
            kappa,
            eta,
        )
        .expect("Gaussian potential parameters are valid")
        .with_mode_hint(self.mean.clone())
    }
}

// ═══════════════════════════════════════════════════════════════════════
// Potential-form densities
// ═══════════════════════════════════════════════════════════════════════

/// μ(dx) ∝ exp(−V(x)) dx with declared curvature window [kappa, eta].
#[derive(Clone)]
pub struct PotentialDensity {
    name: String,
    dim: usize,
    v: PotentialFn,
    grad: GradFn,
    hess: HessFn,
    kappa: f64,
    eta: f64,
    mode_hint: DVector<f64>,
}

impl fmt::Debug for PotentialDensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PotentialDensity")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("kappa", &self.kappa)
            .field("eta", &self.eta)
            .finish()
    }
}

impl PotentialDensity {
    pub fn new(
        name: impl Into<String>,
        dim: usize,
        v: impl Fn(&DVector<f64>) -> f64 + Send + Sync + 'static,
        grad: impl Fn(&DVector<f64>) -> DVector<f64> + Send + Sync + 'static,
        hess: impl Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync + 'static,
        kappa: f64,
        eta: f64,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Parameter("potential dimension must be ≥ 1".into()));
        }
        if !(kappa >= 0.0) {
            return Err(Error::Parameter(format!("kappa must be ≥ 0, got {kappa}")));
        }
        if !(eta >= kappa) {
            return Err(Error::Parameter(format!(
                "eta must be ≥ kappa (got eta = {eta}, kappa = {kappa})"
            )));
        }
        Ok(PotentialDensity {
            name: name.into(),
            dim,
            v: Arc::new(v),
            grad: Arc::new(grad),
            hess: Arc::new(hess),
            kappa,
            eta,
            mode_hint: DVector::zeros(dim),
        })
    }

    /// Starting point for mode searches (defaults to the origin).
    pub fn with_mode_hint(mut self, hint: DVector<f64>) -> Self {
        self.mode_hint = hint;
        self
    }

    /// 1-d double well-free quartic: V = x²/2 + x⁴/4. Strongly convex with
    /// κ = 1; the Hessian 1 + 3x² is unbounded, so η = ∞.
    pub fn quartic_1d() -> Self {
        PotentialDensity::new(
            "quartic1d",
            1,
            |x: &DVector<f64>| {
                let t = x[0];
                0.5 * t * t + 0.25 * t.powi(4)
            },
            |x: &DVector<f64>| DVector::from_element(1, x[0] + x[0].powi(3)),
            |x: &DVector<f64>| DMatrix::from_element(1, 1, 1.0 + 3.0 * x[0] * x[0]),
            1.0,
            f64::INFINITY,
        )
        .expect("static parameters")
    }

    /// 1-d V = x²/2 + log cosh x; κ = 1, η = 2 (V'' = 1 + sech² x ∈ (1, 2]).
    pub fn logcosh_1d() -> Self {
        // ln cosh x = |x| + ln(1 + e^{−2|x|}) − ln 2 avoids overflow for
        // large |x|.
        fn ln_cosh(t: f64) -> f64 {
            let a = t.abs();
            a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
        }
        PotentialDensity::new(
            "logcosh1d",
            1,
            |x: &DVector<f64>| 0.5 * x[0] * x[0] + ln_cosh(x[0]),
            |x: &DVector<f64>| DVector::from_element(1, x[0] + x[0].tanh()),
            |x: &DVector<f64>| {
                let th = x[0].tanh();
                DMatrix::from_element(1, 1, 2.0 - th * th)
            },
            1.0,
            2.0,
        )
        .expect("static parameters")
    }

    /// V = κ‖x‖²/2, i.e. N(0, κ⁻¹ I) in potential form; κ = η = kappa.
    pub fn gaussian_scaled(kappa: f64, dim: usize) -> Result<Self> {
        if !(kappa > 0.0) {
            return Err(Error::Parameter(format!(
                "gaussian_scaled needs kappa > 0, got {kappa}"
            )));
        }
        PotentialDensity::new(
            format!("gaussian_scaled:{kappa}"),
            dim,
            move |x: &DVector<f64>| 0.5 * kappa * x.norm_squared(),
            move |x: &DVector<f64>| kappa * x,
            move |_: &DVector<f64>| kappa * DMatrix::identity(dim, dim),
            kappa,
            kappa,
        )
    }

    /// V = ‖x‖²/2: the standard Gaussian in potential form.
    pub fn standard_gaussian(dim: usize) -> Self {
        Self::gaussian_scaled(1.0, dim).expect("kappa = 1 is valid")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn value(&self, x: &DVector<f64>) -> f64 {
        (self.v)(x)
    }

    pub fn grad(&self, x: &DVector<f64>) -> DVector<f64> {
        (self.grad)(x)
    }

    pub fn hess(&self, x: &DVector<f64>) -> DMatrix<f64> {
        (self.hess)(x)
    }

    /// Minimizer of V by damped Newton from the mode hint. Strong convexity
    /// (κ > 0) guarantees a unique minimum; the quadratic case converges in
    /// one step.
    pub fn mode(&self) -> Result<DVector<f64>> {
        let mut x = self.mode_hint.clone();
        let grad_tol = 1e-10 * self.kappa.max(1.0);
        for _ in 0..200 {
            let g = self.grad(&x);
            if g.norm() <= grad_tol {
                return Ok(x);
            }
            let h = self.hess(&x);
            let step = linalg::solve_spd(&h, &g).unwrap_or_else(|_| {
                // Fall back to a gradient step scaled by the curvature floor.
                &g / self.kappa.max(1.0)
            });
            let mut lambda = 1.0;
            let v0 = self.value(&x);
            let mut accepted = false;
            for _ in 0..40 {
                let cand = &x - lambda * &step;
                if self.value(&cand) < v0 {
                    x = cand;
                    accepted = true;
                    break;
                }
                lambda *= 0.5;
            }
            if !accepted {
                // No descent direction made progress: we are at the minimum
                // up to floating-point resolution.
                return Ok(x);
            }
        }
        let g = self.grad(&x);
        if g.norm() <= 1e-6 {
            Ok(x)
        } else {
            Err(Error::Sampler(format!(
                "mode search did not converge for {} (|grad| = {:.3e})",
                self.name,
                g.norm()
            )))
        }
    }

    /// Draw `n` points. 1-d densities use inverse-CDF on an adaptive grid;
    /// d ≥ 2 uses rejection from N(mode, κ⁻¹ I), which requires κ > 0.
    pub fn sample(&self, n: usize, seed: u64) -> Result<SampleSet> {
        if n == 0 {
            return Err(Error::Parameter("sample count must be ≥ 1".into()));
        }
        if self.dim == 1 {
            self.sample_inverse_cdf(n, seed)
        } else {
            self.sample_rejection(n, seed)
        }
    }

    fn sample_inverse_cdf(&self, n: usize, seed: u64) -> Result<SampleSet> {
        if !(self.kappa > 0.0) {
            return Err(Error::Parameter(
                "inverse-CDF sampling needs a positive curvature floor to size the grid".into(),
            ));
        }
        let mode = self.mode()?[0];
        let sigma = self.kappa.sqrt().recip();
        let v_at = |t: f64| self.value(&DVector::from_element(1, t));
        let v_mode = v_at(mode);

        // Extend until the density has fallen by e^{-60} on both sides.
        let mut lo = mode - 8.0 * sigma;
        let mut hi = mode + 8.0 * sigma;
        for _ in 0..64 {
            if v_at(lo) - v_mode >= 60.0 {
                break;
            }
            lo -= 2.0 * sigma;
        }
        for _ in 0..64 {
            if v_at(hi) - v_mode >= 60.0 {
                break;
            }
            hi += 2.0 * sigma;
        }

        let m = 8192;
        let h = (hi - lo) / m as f64;
        let xs: Vec<f64> = (0..=m).map(|i| lo + i as f64 * h).collect();
        let ws: Vec<f64> = xs.iter().map(|&x| (-(v_at(x) - v_mode)).exp()).collect();
        // Cumulative trapezoid.
        let mut cdf = vec![0.0_f64; m + 1];
        for i in 1..=m {
            cdf[i] = cdf[i - 1] + 0.5 * h * (ws[i - 1] + ws[i]);
        }
        let total = cdf[m];
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::Sampler(format!(
                "inverse-CDF grid for {} has non-finite mass",
                self.name
            )));
        }

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut points = DMatrix::zeros(n, 1);
        for i in 0..n {
            let u: f64 = rng.random::<f64>() * total;
            // Binary search for the segment containing u, then linear
            // interpolation of the piecewise-linear CDF.
            let mut a = 0usize;
            let mut b = m;
            while b - a > 1 {
                let mid = (a + b) / 2;
                if cdf[mid] <= u {
                    a = mid;
                } else {
                    b = mid;
                }
            }
            let seg = (cdf[b] - cdf[a]).max(f64::MIN_POSITIVE);
            let frac = ((u - cdf[a]) / seg).clamp(0.0, 1.0);
            points[(i, 0)] = xs[a] + frac * h;
        }
        Ok(SampleSet { points, seed, source: self.name.clone() })
    }

    fn sample_rejection(&self, n: usize, seed: u64) -> Result<SampleSet> {
        if !(self.kappa > 0.0) {
            return Err(Error::Parameter(
                "rejection sampling needs kappa > 0 for the Gaussian envelope".into(),
            ));
        }
        let mode = self.mode()?;
        let v_mode = self.value(&mode);
        let sigma = self.kappa.sqrt().recip();
        let d = self.dim;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut points = DMatrix::zeros(n, d);
        let mut accepted = 0usize;
        let mut proposals = 0usize;
        let mut z = DVector::zeros(d);
        while accepted < n {
            proposals += 1;
            for k in 0..d {
                z[k] = rng.sample::<f64, _>(StandardNormal) * sigma;
            }
            let cand = &mode + &z;
            // log accept = −(V(x) − V(mode) − κ‖x − mode‖²/2) ≤ 0 by strong
            // convexity, so the envelope is valid.
            let log_acc = -(self.value(&cand) - v_mode - 0.5 * self.kappa * z.norm_squared());
            if log_acc >= 0.0 || rng.random::<f64>() < log_acc.exp() {
                points.row_mut(accepted).copy_from(&cand.transpose());
                accepted += 1;
            }
            if proposals >= 1000 && (accepted as f64) < 1e-4 * proposals as f64 {
                return Err(Error::Sampler(format!(
                    "rejection sampler for {} collapsed (acceptance {:.2e} after {} proposals)",
                    self.name,
                    accepted as f64 / proposals as f64,
                    proposals
                )));
            }
        }
        Ok(SampleSet { points, seed, source: self.name.clone() })
    }
}

// ═══════════════════════════════════════════════════════════════════════
// Either-form measure
// ═══════════════════════════════════════════════════════════════════════

/// An endpoint measure in whichever form the caller has: exact Gaussian or
/// potential. Drift backends pick closed forms when both endpoints are
/// Gaussian and quadrature otherwise.
#[derive(Debug, Clone)]
pub enum Measure {
    Gaussian(GaussianMeasure),
    Potential(PotentialDensity),
}

impl Measure {
    pub fn dim(&self) -> usize {
        match self {
            Measure::Gaussian(g) => g.dim(),
            Measure::Potential(p) => p.dim(),
        }
    }

    pub fn sample(&self, n: usize, seed: u64) -> Result<SampleSet> {
        match self {
            Measure::Gaussian(g) => g.sample(n, seed),
            Measure::Potential(p) => p.sample(n, seed),
        }
    }

    /// Potential form of the measure (identity for potentials).
    pub fn as_potential(&self) -> PotentialDensity {
        match self {
            Measure::Gaussian(g) => g.to_potential(),
            Measure::Potential(p) => p.clone(),
        }
    }

    pub fn name(&self) -> String {
        match self {
            Measure::Gaussian(g) => format!("gaussian(dim={})", g.dim()),
            Measure::Potential(p) => p.name().to_string(),
        }
    }
}

// ═══════════════════════════════════════════════════════════════════════
// Sample sets
// ═══════════════════════════════════════════════════════════════════════

/// Points drawn from a measure; row `i` is the i-th sample.
#[derive(Debug, Clone)]
pub struct SampleSet {
    pub points: DMatrix<f64>,
    pub seed: u64,
    pub source: String,
}

impl SampleSet {
    pub fn len(&self) -> usize {
        self.points.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.points.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.points.ncols()
    }

    pub fn row(&self, i: usize) -> DVector<f64> {
        self.points.row(i).transpose()
    }

    pub fn mean(&self) -> DVector<f64> {
        let n = self.len() as f64;
        let mut m = DVector::zeros(self.dim());
        for i in 0..self.len() {
            m += self.row(i);
        }
        m / n
    }

    /// Unbiased sample covariance.
    pub fn covariance(&self) -> DMatrix<f64> {
        let n = self.len();
        let m = self.mean();
        let mut c = DMatrix::zeros(self.dim(), self.dim());
        for i in 0..n {
            let r = self.row(i) - &m;
            c += &r * r.transpose();
        }
        c / (n as f64 - 1.0).max(1.0)
    }
}

// ═══════════════════════════════════════════════════════════════════════
// Curvature audit
// ═══════════════════════════════════════════════════════════════════════

/// Result of [`logconcavity_check`].
#[derive(Debug, Clone, serde::Serialize)]
pub struct CurvatureReport {
    pub density: String,
    pub declared_kappa: f64,
    pub declared_eta: f64,
    pub min_hessian_eigenvalue: f64,
    pub max_hessian_eigenvalue: f64,
    pub pass: bool,
}

/// Scan Hessian eigenvalues of the potential over `grid` and compare with the
/// declared window; a slack of 1e−8 absorbs eigen-solver round-off.
pub fn logconcavity_check(density: &PotentialDensity, grid: &[DVector<f64>]) -> Result<CurvatureReport> {
    if grid.is_empty() {
        return Err(Error::Parameter("curvature check needs a non-empty grid".into()));
    }
    let mut min_eig = f64::INFINITY;
    let mut max_eig = f64::NEG_INFINITY;
    for x in grid {
        if x.len() != density.dim() {
            return Err(Error::Domain(format!(
                "grid point of dimension {} for a {}-dimensional density",
                x.len(),
                density.dim()
            )));
        }
        let h = density.hess(x);
        let eigs = linalg::symmetric_eigenvalues(&h);
        min_eig = min_eig.min(eigs[0]);
        max_eig = max_eig.max(*eigs.last().expect("non-empty"));
    }
    let pass = min_eig >= density.kappa() - 1e-8
        && (density.eta().is_infinite() || max_eig <= density.eta() + 1e-8);
    Ok(CurvatureReport {
        density: density.name().to_string(),
        declared_kappa: density.kappa(),
        declared_eta: density.eta(),
        min_hessian_eigenvalue: min_eig,
        max_hessian_eigenvalue: max_eig,
        pass,
    })
}

/// Uniform 1-d audit grid as column vectors, for [`logconcavity_check`].
pub fn grid_1d(lo: f64, hi: f64, n: usize) -> Vec<DVector<f64>> {
    (0..n)
        .map(|i| {
            let t = if n == 1 { 0.5 } else { i as f64 / (n - 1) as f64 };
            DVector::from_element(1, lo + t * (hi - lo))
        })
        .collect()
}

// ═══════════════════════════════════════════════════════════════════════
// Gaussian closed forms
// ═══════════════════════════════════════════════════════════════════════

/// The affine map x ↦ A x + b.
#[derive(Debug, Clone)]
pub struct AffineMap {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
}

impl AffineMap {
    pub fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.a * x + &self.b
    }

    /// Lipschitz constant = spectral norm of the linear part.
    pub fn lipschitz(&self) -> f64 {
        linalg::spectral_norm(&self.a)
    }
}

/// Optimal transport map between Gaussians with commuting covariances:
/// T(x) = m₁ + Σ₁^{1/2} Σ₀^{−1/2} (x − m₀). Non-commuting covariances are
/// rejected (the conjugated square-root form is deliberately out of scope).
pub fn gaussian_ot_map(mu0: &GaussianMeasure, mu1: &GaussianMeasure) -> Result<AffineMap> {
    if mu0.dim() != mu1.dim() {
        return Err(Error::Domain(format!(
            "transport between dimensions {} and {}",
            mu0.dim(),
            mu1.dim()
        )));
    }
    let comm = linalg::commutator_norm(mu0.cov(), mu1.cov());
    if comm > 1e-10 {
        return Err(Error::Unsupported(format!(
            "covariances do not commute (|[S0, S1]| = {comm:.3e}); only the simultaneously \
             diagonalizable case has the closed-form map"
        )));
    }
    let a = linalg::sym_sqrt(mu1.cov())? * linalg::sym_inv_sqrt(mu0.cov())?;
    let pushed = &a * mu0.cov() * a.transpose();
    let resid = (&pushed - mu1.cov()).amax();
    if resid > 1e-10 {
        return Err(Error::numeric(format!(
            "transport map failed its pushforward check (residual {resid:.3e})"
        )));
    }
    let b = mu1.mean() - &a * mu0.mean();
    Ok(AffineMap { a, b })
}

/// Marginal of the interpolation at time t for Gaussian endpoints:
/// N(α m₀ + β m₁, α² Σ₀ + β² Σ₁).
pub fn gaussian_interpolant_marginal(
    mu0: &GaussianMeasure,
    mu1: &GaussianMeasure,
    schedule: &Schedule,
    t: f64,
) -> Result<GaussianMeasure> {
    if mu0.dim() != mu1.dim() {
        return Err(Error::Domain(format!(
            "interpolation between dimensions {} and {}",
            mu0.dim(),
            mu1.dim()
        )));
    }
    let sv = schedule.eval(t)?;
    let mean = sv.alpha * mu0.mean() + sv.beta * mu1.mean();
    let cov = sv.alpha * sv.alpha * mu0.cov() + sv.beta * sv.beta * mu1.cov();
    GaussianMeasure::new(mean, cov)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hermite::HermiteRule;
    use approx::assert_relative_eq;

    fn dv(vals: &[f64]) -> DVector<f64> {
        DVector::from_row_slice(vals)
    }

    #[test]
    fn curvature_windows_of_shipped_densities() {
        let quad = PotentialDensity::quartic_1d();
        let rep = logconcavity_check(&quad, &grid_1d(-4.0, 4.0, 81)).unwrap();
        assert!(rep.pass);
        assert_relative_eq!(rep.min_hessian_eigenvalue, 1.0, epsilon = 1e-12);
        assert_relative_eq!(rep.max_hessian_eigenvalue, 49.0, epsilon = 1e-12);

        let lc = PotentialDensity::logcosh_1d();
        let rep = logconcavity_check(&lc, &grid_1d(-6.0, 6.0, 81)).unwrap();
        assert!(rep.pass);
        assert_relative_eq!(rep.max_hessian_eigenvalue, 2.0, epsilon = 1e-12);
        assert!(rep.min_hessian_eigenvalue >= 1.0);

        let sg = PotentialDensity::gaussian_scaled(4.0, 2).unwrap();
        let grid = vec![dv(&[0.0, 0.0]), dv(&[1.0, -2.0])];
        let rep = logconcavity_check(&sg, &grid).unwrap();
        assert!(rep.pass);
        assert_relative_eq!(rep.min_hessian_eigenvalue, 4.0, epsilon = 1e-12);
        assert_relative_eq!(rep.max_hessian_eigenvalue, 4.0, epsilon = 1e-12);
    }

    #[test]
    fn gradients_and_hessians_match_finite_differences() {
        let densities = vec![
            PotentialDensity::quartic_1d(),
            PotentialDensity::logcosh_1d(),
            PotentialDensity::gaussian_scaled(0.7, 1).unwrap(),
            GaussianMeasure::scalar(0.3, 2.0).unwrap().to_potential(),
        ];
        let h = 1e-5;
        for d in densities {
            for i in 0..51 {
                let x = -3.0 + 6.0 * i as f64 / 50.0;
                let xp = dv(&[x + h]);
                let xm = dv(&[x - h]);
                let xv = dv(&[x]);
                let fd_grad = (d.value(&xp) - d.value(&xm)) / (2.0 * h);
                let an_grad = d.grad(&xv)[0];
                assert!(
                    (fd_grad - an_grad).abs() <= 1e-5 * an_grad.abs().max(1.0),
                    "{} grad at {x}: {fd_grad} vs {an_grad}",
                    d.name()
                );
                let fd_hess = (d.grad(&xp)[0] - d.grad(&xm)[0]) / (2.0 * h);
                let an_hess = d.hess(&xv)[(0, 0)];
                assert!(
                    (fd_hess - an_hess).abs() <= 1e-5 * an_hess.abs().max(1.0),
                    "{} hess at {x}: {fd_hess} vs {an_hess}",
                    d.name()
                );
            }
        }
    }

    #[test]
    fn gaussian_sampling_moments() {
        let mu = GaussianMeasure::standard(2);
        let s = mu.sample(100_000, 7).unwrap();
        let m = s.mean();
        let c = s.covariance();
        let se = (1.0 / 100_000.0_f64).sqrt();
        assert!(m[0].abs() < 3.0 * se && m[1].abs() < 3.0 * se, "mean {m:?}");
        assert!((c[(0, 0)] - 1.0).abs() < 0.02);
        assert!((c[(1, 1)] - 1.0).abs() < 0.02);
        assert!(c[(0, 1)].abs() < 0.02);
    }

    #[test]
    fn inverse_cdf_matches_gaussian_reference() {
        // V = x²/2 through the generic 1-d path must reproduce N(0, 1).
        let d = PotentialDensity::standard_gaussian(1);
        let s = d.sample(100_000, 11).unwrap();
        let c = s.covariance();
        assert!((c[(0, 0)] - 1.0).abs() < 0.02, "variance {}", c[(0, 0)]);
        assert!(s.mean()[0].abs() < 0.02);
    }

    #[test]
    fn single_draw_is_finite() {
        let d = PotentialDensity::quartic_1d();
        let s = d.sample(1, 3).unwrap();
        assert_eq!(s.len(), 1);
        assert!(s.points[(0, 0)].is_finite());
    }

    #[test]
    fn quartic_sample_variance_matches_quadrature() {
        // Oracle: E[x²] under e^{−x²/2−x⁴/4} by Gauss–Hermite against the
        // standard normal proposal (x = √2 y adds a factor e^{y²}).
        let rule = HermiteRule::new(96).unwrap();
        let sqrt2 = std::f64::consts::SQRT_2;
        let weight = |x: f64| (-(0.25 * x.powi(4))).exp(); // e^{−x²/2} absorbed by proposal
        let z: f64 = rule.integrate(|y| weight(sqrt2 * y)) * sqrt2;
        let m2: f64 = rule.integrate(|y| {
            let x = sqrt2 * y;
            x * x * weight(x)
        }) * sqrt2;
        let var = m2 / z;

        let d = PotentialDensity::quartic_1d();
        let n = 100_000;
        let s = d.sample(n, 5).unwrap();
        let c = s.covariance()[(0, 0)];
        // MC standard error of the variance ≈ var·sqrt(2/n).
        let se = var * (2.0 / n as f64).sqrt();
        assert!((c - var).abs() < 3.0 * se, "sample {c} vs quadrature {var} (se {se})");
    }

    #[test]
    fn rejection_sampler_in_2d_matches_quadrature_moments() {
        // V(x) = ‖x‖²/2 + ln cosh x₁: κ = 1, mode at 0, separable in x₂.
        fn ln_cosh(t: f64) -> f64 {
            let a = t.abs();
            a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
        }
        let d = PotentialDensity::new(
            "logcosh-x1",
            2,
            |x: &DVector<f64>| 0.5 * x.norm_squared() + ln_cosh(x[0]),
            |x: &DVector<f64>| dv(&[x[0] + x[0].tanh(), x[1]]),
            |x: &DVector<f64>| {
                let th = x[0].tanh();
                DMatrix::from_diagonal(&dv(&[2.0 - th * th, 1.0]))
            },
            1.0,
            2.0,
        )
        .unwrap();

        let rule = HermiteRule::new(96).unwrap();
        let sqrt2 = std::f64::consts::SQRT_2;
        let weight = |x: f64| (-ln_cosh(x)).exp();
        let z: f64 = rule.integrate(|y| weight(sqrt2 * y));
        let m2: f64 = rule.integrate(|y| {
            let x = sqrt2 * y;
            x * x * weight(x)
        });
        let var_x1 = m2 / z;

        let n = 50_000;
        let s = d.sample(n, 9).unwrap();
        let c = s.covariance();
        let se1 = var_x1 * (2.0 / n as f64).sqrt();
        assert!((c[(0, 0)] - var_x1).abs() < 3.0 * se1, "{} vs {var_x1}", c[(0, 0)]);
        let se2 = 1.0 * (2.0 / n as f64).sqrt();
        assert!((c[(1, 1)] - 1.0).abs() < 3.0 * se2);
        assert!(s.mean().amax() < 0.02);
    }

    #[test]
    fn ot_map_scalar_and_diagonal_cases() {
        // N(0,1) → N(0, 1/4): T(x) = x/2.
        let m0 = GaussianMeasure::scalar(0.0, 1.0).unwrap();
        let m1 = GaussianMeasure::scalar(0.0, 0.25).unwrap();
        let t = gaussian_ot_map(&m0, &m1).unwrap();
        assert_relative_eq!(t.a[(0, 0)], 0.5, epsilon = 1e-12);
        assert_relative_eq!(t.lipschitz(), 0.5, epsilon = 1e-12);

        // diag(4, 1) → diag(1, 4): A = diag(1/2, 2).
        let m0 = GaussianMeasure::new(dv(&[0.0, 0.0]), DMatrix::from_diagonal(&dv(&[4.0, 1.0]))).unwrap();
        let m1 = GaussianMeasure::new(dv(&[0.0, 0.0]), DMatrix::from_diagonal(&dv(&[1.0, 4.0]))).unwrap();
        let t = gaussian_ot_map(&m0, &m1).unwrap();
        assert_relative_eq!(t.a[(0, 0)], 0.5, epsilon = 1e-12);
        assert_relative_eq!(t.a[(1, 1)], 2.0, epsilon = 1e-12);
        assert_relative_eq!(t.lipschitz(), 2.0, epsilon = 1e-12);

        // Identical endpoints: identity map.
        let t = gaussian_ot_map(&m0, &m0).unwrap();
        assert!((0..2).all(|i| (t.a[(i, i)] - 1.0).abs() < 1e-12));
        assert!(t.b.amax() < 1e-12);
    }

    #[test]
    fn ot_map_rejects_non_commuting_covariances() {
        let rot = DMatrix::from_row_slice(2, 2, &[1.5, 0.5, 0.5, 1.0]);
        let m0 = GaussianMeasure::new(dv(&[0.0, 0.0]), DMatrix::from_diagonal(&dv(&[4.0, 1.0]))).unwrap();
        let m1 = GaussianMeasure::new(dv(&[0.0, 0.0]), rot).unwrap();
        match gaussian_ot_map(&m0, &m1) {
            Err(Error::Unsupported(_)) => {}
            other => panic!("expected unsupported-case error, got {other:?}"),
        }
    }

    #[test]
    fn ot_map_pushforward_of_samples() {
        let m0 = GaussianMeasure::scalar(1.0, 1.0).unwrap();
        let m1 = GaussianMeasure::scalar(-2.0, 0.25).unwrap();
        let t = gaussian_ot_map(&m0, &m1).unwrap();
        let s = m0.sample(10_000, 21).unwrap();
        let mapped: Vec<f64> = (0..s.len()).map(|i| t.apply(&s.row(i))[0]).collect();
        let n = mapped.len() as f64;
        let mean = mapped.iter().sum::<f64>() / n;
        let var = mapped.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
        let se_mean = (0.25_f64 / n).sqrt();
        let se_var = 0.25 * (2.0 / n).sqrt();
        assert!((mean + 2.0).abs() < 3.0 * se_mean, "mean {mean}");
        assert!((var - 0.25).abs() < 3.0 * se_var, "var {var}");
    }

    #[test]
    fn interpolant_marginal_values() {
        let m0 = GaussianMeasure::scalar(0.0, 1.0).unwrap();
        let m1 = GaussianMeasure::scalar(0.0, 0.25).unwrap();
        let lin = Schedule::linear();
        let at0 = gaussian_interpolant_marginal(&m0, &m1, &lin, 0.0).unwrap();
        assert_relative_eq!(at0.cov()[(0, 0)], 1.0, epsilon = 1e-14);
        let at1 = gaussian_interpolant_marginal(&m0, &m1, &lin, 1.0).unwrap();
        assert_relative_eq!(at1.cov()[(0, 0)], 0.25, epsilon = 1e-14);
        let mid = gaussian_interpolant_marginal(&m0, &m1, &lin, 0.5).unwrap();
        assert_relative_eq!(mid.cov()[(0, 0)], 0.3125, epsilon = 1e-14);
    }

    #[test]
    fn interpolant_marginal_matches_sampled_interpolation() {
        let m0 = GaussianMeasure::scalar(0.5, 1.0).unwrap();
        let m1 = GaussianMeasure::scalar(-1.0, 0.25).unwrap();
        let sch = Schedule::trig();
        let n = 20_000;
        let s0 = m0.sample(n, 31).unwrap();
        let s1 = m1.sample(n, 32).unwrap();
        for &t in &[0.25, 0.5, 0.75] {
            let sv = sch.eval(t).unwrap();
            let pts: Vec<f64> = (0..n)
                .map(|i| sv.alpha * s0.points[(i, 0)] + sv.beta * s1.points[(i, 0)])
                .collect();
            let mean = pts.iter().sum::<f64>() / n as f64;
            let var = pts.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n as f64 - 1.0);
            let marg = gaussian_interpolant_marginal(&m0, &m1, &sch, t).unwrap();
            let (em, ev) = (marg.mean()[0], marg.cov()[(0, 0)]);
            let se_mean = (ev / n as f64).sqrt();
            let se_var = ev * (2.0 / n as f64).sqrt();
            assert!((mean - em).abs() < 3.0 * se_mean, "t={t}: mean {mean} vs {em}");
            assert!((var - ev).abs() < 3.0 * se_var, "t={t}: var {var} vs {ev}");
        }
    }

    #[test]
    fn gaussian_validation_rejects_bad_covariances() {
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.2, 1.0]);
        assert!(GaussianMeasure::new(dv(&[0.0, 0.0]), asym).is_err());
        let indef = DMatrix::from_diagonal(&dv(&[1.0, -0.1]));
        assert!(GaussianMeasure::new(dv(&[0.0, 0.0]), indef).is_err());
    }

    #[test]
    fn to_potential_reports_curvature_window() {
        let m = GaussianMeasure::new(
            dv(&[0.0, 0.0]),
            DMatrix::from_diagonal(&dv(&[4.0, 0.25])),
        )
        .unwrap();
        let p = m.to_potential();
        assert_relative_eq!(p.kappa(), 0.25, epsilon = 1e-12);
        assert_relative_eq!(p.eta(), 4.0, epsilon = 1e-12);
        // V at a point: ½ xᵀ Σ⁻¹ x.
        let x = dv(&[2.0, 1.0]);
        assert_relative_eq!(p.value(&x), 0.5 * (4.0 / 4.0 + 1.0 / 0.25), epsilon = 1e-12);
    }

    #[test]
    fn mode_search_finds_shifted_minimum() {
        let m = GaussianMeasure::scalar(3.0, 0.5).unwrap();
        let p = m.to_potential();
        let mode = p.mode().unwrap();
        assert_relative_eq!(mode[0], 3.0, epsilon = 1e-8);
        // And for a non-quadratic: V' = x + x³ = 0 only at 0.
        let q = PotentialDensity::quartic_1d();
        assert!(q.mode().unwrap()[0].abs() < 1e-10);
    }
}
