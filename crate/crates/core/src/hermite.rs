//! Gauss–Hermite quadrature rules.
//!
//! Nodes and weights for
//!
//! ```text
//!     ∫ f(y) exp(-y²) dy  ≈  Σ_i w_i f(y_i)
//! ```
//!
//! Nodes come from the Golub–Welsch method: they are the eigenvalues of the
//! symmetric Jacobi matrix of the (physicists') Hermite recurrence — zero
//! diagonal, off-diagonal `sqrt(k/2)`. Weights do *not* come from the
//! eigenvectors: the weight at an extreme node is ~exp(-y²), and an
//! eigensolver only guarantees absolute accuracy in vector components, which
//! makes the logs of the small weights pure noise. Instead each weight is the
//! Christoffel number
//!
//! ```text
//!     w_i = 1 / Σ_{j<n} h̃_j(y_i)²,
//! ```
//!
//! with h̃_j the orthonormal Hermite polynomials, evaluated through the
//! *Hermite functions* φ_j(y) = h̃_j(y)·exp(-y²/2), whose recurrence
//!
//! ```text
//!     φ_0 = π^{-1/4} e^{-y²/2},   φ_{j+1} = y·sqrt(2/(j+1))·φ_j − sqrt(j/(j+1))·φ_{j-1}
//! ```
//!
//! stays O(1) at every node. That yields the shifted logs
//! `ln w_i + y_i² = −ln Σ_j φ_j(y_i)²` directly and cancellation-free — the
//! quantity log-domain integrators actually need, since their integrands carry
//! the exp(+y²) compensation. An `n`-point rule integrates `p(y) exp(-y²)`
//! exactly for polynomials `p` up to degree `2n − 1`; for the smooth
//! sub-Gaussian integrands produced by log-concave potentials the error decays
//! geometrically in `n`.
//!
//! Rules are cheap to build at the sizes used here (≤ a few hundred points),
//! and callers cache them per configuration, so no global table is kept.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Rules beyond this size would underflow φ_0 = π^{-1/4}·exp(-y²/2) at the
/// extreme nodes (y² ≈ 2n) and are far past the point of diminishing returns
/// for the integrands here.
const MAX_NODES: usize = 400;

/// A fixed Gauss–Hermite rule. Nodes are sorted ascending. `log_weights`
/// caches `ln w_i`; `log_weights_shifted` caches `ln w_i + y_i²`, the
/// well-scaled form for integrands written relative to exp(-y²).
#[derive(Debug, Clone)]
pub struct HermiteRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub log_weights: Vec<f64>,
    pub log_weights_shifted: Vec<f64>,
}

impl HermiteRule {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Parameter("Gauss-Hermite rule needs at least one node".into()));
        }
        if n > MAX_NODES {
            return Err(Error::Parameter(format!(
                "Gauss-Hermite rule supports at most {MAX_NODES} nodes, got {n}"
            )));
        }
        let mut nodes: Vec<f64> = if n == 1 {
            vec![0.0]
        } else {
            let mut jacobi = DMatrix::<f64>::zeros(n, n);
            for k in 1..n {
                let b = (k as f64 / 2.0).sqrt();
                jacobi[(k - 1, k)] = b;
                jacobi[(k, k - 1)] = b;
            }
            jacobi.symmetric_eigen().eigenvalues.iter().copied().collect()
        };
        nodes.sort_by(f64::total_cmp);

        let mut weights = Vec::with_capacity(n);
        let mut log_weights = Vec::with_capacity(n);
        let mut log_weights_shifted = Vec::with_capacity(n);
        for &y in &nodes {
            let shifted = -christoffel_log_sum(n, y);
            log_weights_shifted.push(shifted);
            log_weights.push(shifted - y * y);
            weights.push((shifted - y * y).exp());
        }
        Ok(HermiteRule { nodes, weights, log_weights, log_weights_shifted })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// ∫ f(y) exp(-y²) dy by this rule.
    pub fn integrate(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&y, &w)| w * f(y))
            .sum()
    }
}

/// ln Σ_{j<n} φ_j(y)² for the orthonormal Hermite functions φ_j.
fn christoffel_log_sum(n: usize, y: f64) -> f64 {
    let mut prev = 0.0_f64;
    let mut cur = std::f64::consts::PI.powf(-0.25) * (-0.5 * y * y).exp();
    let mut sum = cur * cur;
    for j in 0..n - 1 {
        let jf = j as f64;
        let next = y * (2.0 / (jf + 1.0)).sqrt() * cur - (jf / (jf + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
        sum += cur * cur;
    }
    sum.ln()
}
