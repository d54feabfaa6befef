//! Symmetric eigenvalues by cyclic Jacobi rotations, and the singular-value
//! quantities built on them.
//!
//! Only small matrices pass through here (diagonal sub-blocks, sub-block Gram
//! matrices), so the `O(n³)` per sweep cost is irrelevant next to robustness.

use super::matrix::{Lu, Matrix};
use crate::error::{Error, Result};

/// Symmetry tolerance accepted by the eigen routines.
pub const SYMMETRY_TOL: f64 = 1e-12;

const MAX_SWEEPS: usize = 100;

/// All eigenvalues of a symmetric matrix, ascending.
pub fn symmetric_eigenvalues(a: &Matrix) -> Result<Vec<f64>> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch { expected: a.rows(), actual: a.cols() });
    }
    let asym = a.max_asymmetry();
    if asym > SYMMETRY_TOL * a.max_abs().max(1.0) {
        return Err(Error::NotSymmetric(asym));
    }
    let n = a.rows();
    let mut m = a.clone();
    // work on the exactly symmetric part
    for i in 0..n {
        for j in i + 1..n {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
    let total: f64 = m.as_slice().iter().map(|v| v * v).sum();
    let mut converged = n <= 1;
    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[(i, j)] * m[(i, j)])
            .sum();
        if off <= total * 1e-32 || off == 0.0 {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                rotate(&mut m, p, q);
            }
        }
    }
    if !converged {
        return Err(Error::NoConvergence { what: "cyclic Jacobi", iterations: MAX_SWEEPS });
    }
    let mut eig: Vec<f64> = (0..n).map(|k| m[(k, k)]).collect();
    eig.sort_by(f64::total_cmp);
    Ok(eig)
}

fn rotate(m: &mut Matrix, p: usize, q: usize) {
    let apq = m[(p, q)];
    if apq == 0.0 {
        return;
    }
    let app = m[(p, p)];
    let aqq = m[(q, q)];
    let theta = (aqq - app) / (2.0 * apq);
    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
    let t = if theta == 0.0 { 1.0 } else { t };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;
    let n = m.rows();
    for k in 0..n {
        let mkp = m[(k, p)];
        let mkq = m[(k, q)];
        m[(k, p)] = c * mkp - s * mkq;
        m[(k, q)] = s * mkp + c * mkq;
    }
    for k in 0..n {
        let mpk = m[(p, k)];
        let mqk = m[(q, k)];
        m[(p, k)] = c * mpk - s * mqk;
        m[(q, k)] = s * mpk + c * mqk;
    }
    m[(p, q)] = 0.0;
    m[(q, p)] = 0.0;
}

/// `(λ_min, λ_max)` of a symmetric matrix.
pub fn symmetric_extreme_eigs(a: &Matrix) -> Result<(f64, f64)> {
    let eig = symmetric_eigenvalues(a)?;
    match (eig.first(), eig.last()) {
        (Some(&lo), Some(&hi)) => Ok((lo, hi)),
        _ => Err(Error::param("matrix", "empty matrix has no eigenvalues")),
    }
}

/// Largest singular value, from the largest eigenvalue of the smaller Gram matrix.
pub fn spectral_norm(b: &Matrix) -> Result<f64> {
    if b.rows() == 0 || b.cols() == 0 {
        return Err(Error::param("matrix", "spectral norm of an empty matrix"));
    }
    let scale = b.max_abs();
    if scale == 0.0 {
        return Ok(0.0);
    }
    if !scale.is_finite() {
        return Err(Error::param("matrix", "non-finite entries"));
    }
    let g = b.scaled(1.0 / scale).small_gram();
    let (_, hi) = symmetric_extreme_eigs(&g)?;
    Ok(scale * hi.max(0.0).sqrt())
}

/// `(‖B⁻¹‖₂)⁻¹` for a square matrix. Singular input is an error.
pub fn inverse_norm_reciprocal(b: &Matrix) -> Result<f64> {
    let inv = Lu::factor(b)?.inverse();
    Ok(1.0 / spectral_norm(&inv)?)
}
