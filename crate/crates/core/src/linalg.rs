//! Small dense linear-algebra helpers used throughout the crate.
//!
//! Everything here operates on `nalgebra` dynamic matrices of dimension ≤ 10,
//! so the dense symmetric eigendecomposition is always the right tool; no
//! sparse or blocked paths are needed.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Largest entry of |A − Aᵀ|; zero for exactly symmetric matrices.
pub fn symmetry_residual(a: &DMatrix<f64>) -> f64 {
    let mut worst = 0.0_f64;
    for i in 0..a.nrows() {
        for j in (i + 1)..a.ncols() {
            worst = worst.max((a[(i, j)] - a[(j, i)]).abs());
        }
    }
    worst
}

/// Spectral norm (largest singular value). Falls back to the Frobenius norm
/// only if the SVD fails to converge, which does not happen for the small
/// well-scaled matrices this crate produces.
pub fn spectral_norm(a: &DMatrix<f64>) -> f64 {
    a.clone()
        .try_svd(false, false, f64::EPSILON, 200)
        .map(|svd| svd.singular_values.max())
        .unwrap_or_else(|| a.norm())
}

/// Eigenvalues of a (numerically) symmetric matrix, ascending.
pub fn symmetric_eigenvalues(a: &DMatrix<f64>) -> Vec<f64> {
    let sym = 0.5 * (a + a.transpose());
    let mut eigs: Vec<f64> = sym.symmetric_eigen().eigenvalues.iter().copied().collect();
    eigs.sort_by(|x, y| x.total_cmp(y));
    eigs
}

/// Largest eigenvalue of a symmetric matrix.
pub fn max_eigenvalue(a: &DMatrix<f64>) -> f64 {
    *symmetric_eigenvalues(a).last().expect("non-empty matrix")
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(a: &DMatrix<f64>) -> f64 {
    symmetric_eigenvalues(a)[0]
}

/// Symmetric positive-semidefinite square root via eigendecomposition.
/// Negative eigenvalues within `-1e-10` are clamped to zero (round-off);
/// anything more negative is an error.
pub fn sym_sqrt(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let sym = 0.5 * (a + a.transpose());
    let eig = sym.symmetric_eigen();
    let mut vals = eig.eigenvalues.clone();
    for v in vals.iter_mut() {
        if *v < -1e-10 {
            return Err(Error::Domain(format!(
                "matrix square root of a non-PSD matrix (eigenvalue {v:.3e})"
            )));
        }
        *v = v.max(0.0).sqrt();
    }
    let q = eig.eigenvectors;
    Ok(&q * DMatrix::from_diagonal(&vals) * q.transpose())
}

/// Inverse of the symmetric square root, for strictly positive-definite input.
pub fn sym_inv_sqrt(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let sym = 0.5 * (a + a.transpose());
    let eig = sym.symmetric_eigen();
    let mut vals = eig.eigenvalues.clone();
    for v in vals.iter_mut() {
        if *v <= 0.0 {
            return Err(Error::Domain(format!(
                "inverse square root of a non-PD matrix (eigenvalue {v:.3e})"
            )));
        }
        *v = 1.0 / v.sqrt();
    }
    let q = eig.eigenvectors;
    Ok(&q * DMatrix::from_diagonal(&vals) * q.transpose())
}

/// Solve A x = b for symmetric positive-definite A via Cholesky.
pub fn solve_spd(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    let chol = a
        .clone()
        .cholesky()
        .ok_or_else(|| Error::numeric("Cholesky factorization of a non-PD matrix"))?;
    Ok(chol.solve(b))
}

/// Inverse of a symmetric positive-definite matrix via Cholesky.
pub fn inv_spd(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let chol = a
        .clone()
        .cholesky()
        .ok_or_else(|| Error::numeric("Cholesky factorization of a non-PD matrix"))?;
    Ok(chol.inverse())
}

/// Largest entry of |AB − BA|, used to decide whether two covariances share
/// an eigenbasis.
pub fn commutator_norm(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let c = a * b - b * a;
    c.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}
