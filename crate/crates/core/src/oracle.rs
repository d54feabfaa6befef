//! Brute-force and exact reference computations used to check the main
//! modules.
//!
//! Nothing here calls into `linalg`'s norm, eigen or factorization routines,
//! nor into `select` or `bounds`: matrices are copied out into nested `Vec`s
//! and handled by separate code (classical max-pivot Jacobi, Cholesky,
//! Gaussian elimination with complete pivoting). Only the container types
//! are shared.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{BlockMatrix, Matrix};
use crate::model::{QuadraticProgram, Regularization};

type Dense = Vec<Vec<f64>>;

const MAX_DIM: usize = 64;

fn to_dense(m: &Matrix) -> Dense {
    (0..m.rows()).map(|i| m.row(i).to_vec()).collect()
}

fn sub(m: &Matrix, r0: usize, c0: usize, rows: usize, cols: usize) -> Dense {
    (0..rows).map(|i| m.row(r0 + i)[c0..c0 + cols].to_vec()).collect()
}

/// All eigenvalues of a symmetric matrix (ascending), by classical Jacobi
/// iteration that always annihilates the largest off-diagonal entry.
pub fn full_symmetric_eigensolve(b: &Matrix) -> Result<Vec<f64>> {
    let a = to_dense(b);
    let n = a.len();
    if n > MAX_DIM || !b.is_square() {
        return Err(Error::param("matrix", format!("oracle eigensolve needs a square matrix of size ≤ {MAX_DIM}")));
    }
    let scale = a.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    for i in 0..n {
        for j in 0..i {
            if (a[i][j] - a[j][i]).abs() > 1e-12 * scale.max(1.0) {
                return Err(Error::NotSymmetric((a[i][j] - a[j][i]).abs()));
            }
        }
    }
    jacobi_max_pivot(a)
}

fn jacobi_max_pivot(mut a: Dense) -> Result<Vec<f64>> {
    let n = a.len();
    let frob: f64 = a.iter().flatten().map(|v| v * v).sum::<f64>().sqrt();
    let cap = 200 * n * n + 100;
    for _ in 0..cap {
        let (mut p, mut q, mut big) = (0, 0, 0.0f64);
        for (i, row) in a.iter().enumerate() {
            for (j, v) in row.iter().enumerate().skip(i + 1) {
                if v.abs() > big {
                    big = v.abs();
                    p = i;
                    q = j;
                }
            }
        }
        if big <= 1e-17 * frob || big == 0.0 {
            let mut eig: Vec<f64> = (0..n).map(|k| a[k][k]).collect();
            eig.sort_by(|x, y| x.partial_cmp(y).unwrap());
            return Ok(eig);
        }
        // rotation angle from tan(2φ) = 2 a_pq / (a_qq − a_pp)
        let phi = 0.5 * (2.0 * a[p][q]).atan2(a[q][q] - a[p][p]);
        let (s, c) = phi.sin_cos();
        for row in a.iter_mut() {
            let (x, y) = (row[p], row[q]);
            row[p] = c * x - s * y;
            row[q] = s * x + c * y;
        }
        for k in 0..n {
            let (x, y) = (a[p][k], a[q][k]);
            a[p][k] = c * x - s * y;
            a[q][k] = s * x + c * y;
        }
        a[p][q] = 0.0;
        a[q][p] = 0.0;
    }
    Err(Error::NoConvergence { what: "oracle Jacobi", iterations: cap })
}

fn gram(b: &Dense) -> Dense {
    let rows = b.len();
    let cols = b.first().map_or(0, Vec::len);
    let mut g = vec![vec![0.0; cols]; cols];
    for (i, gi) in g.iter_mut().enumerate() {
        for (j, gij) in gi.iter_mut().enumerate() {
            *gij = (0..rows).map(|k| b[k][i] * b[k][j]).sum();
        }
    }
    g
}

/// Largest singular value of a dense block.
fn dense_spectral_norm(b: &Dense) -> Result<f64> {
    let eig = jacobi_max_pivot(gram(b))?;
    Ok(eig.last().copied().unwrap_or(0.0).max(0.0).sqrt())
}

fn random_unit_block_max(partition: &crate::linalg::BlockPartition, rng: &mut impl Rng) -> Vec<f64> {
    let mut x: Vec<f64> = (0..partition.dim()).map(|_| rng.sample(StandardNormal)).collect();
    // normalize every block to unit length; a random subset is then shrunk so
    // that the sample explores the whole unit ball of the block-max norm
    for i in 0..partition.num_blocks() {
        let r = partition.range(i);
        let nrm = x[r.clone()].iter().map(|v| v * v).sum::<f64>().sqrt();
        let shrink = if i == 0 || rng.random_bool(0.7) { 1.0 } else { rng.random::<f64>() };
        for v in &mut x[r] {
            *v *= shrink / nrm;
        }
    }
    x
}

fn block_max(x: &[f64], partition: &crate::linalg::BlockPartition) -> f64 {
    (0..partition.num_blocks())
        .map(|i| x[partition.range(i)].iter().map(|v| v * v).sum::<f64>().sqrt())
        .fold(0.0, f64::max)
}

fn dense_matvec(a: &Dense, x: &[f64]) -> Vec<f64> {
    a.iter().map(|row| row.iter().zip(x).map(|(p, q)| p * q).sum()).collect()
}

/// Lower estimate of `‖B‖_{2,p}`: the largest `‖Bx‖_{2,p}` over `samples`
/// random `x` with `‖x‖_{2,p} = 1`.
pub fn sampled_induced_norm(b: &BlockMatrix, samples: usize, rng: &mut impl Rng) -> f64 {
    let a = to_dense(b.matrix());
    (0..samples.max(1))
        .map(|_| {
            let x = random_unit_block_max(b.partition(), rng);
            block_max(&dense_matvec(&a, &x), b.partition())
        })
        .fold(0.0, f64::max)
}

/// Solves `a x = rhs` by Gaussian elimination with complete pivoting.
pub fn solve_general(a: &Matrix, rhs: &[f64]) -> Result<Vec<f64>> {
    let n = a.rows();
    let mut m = to_dense(a);
    let mut b = rhs.to_vec();
    let mut cols: Vec<usize> = (0..n).collect();
    for k in 0..n {
        let (mut pi, mut pj, mut big) = (k, k, 0.0f64);
        for (i, row) in m.iter().enumerate().skip(k) {
            for (j, v) in row.iter().enumerate().skip(k) {
                if v.abs() > big {
                    big = v.abs();
                    pi = i;
                    pj = j;
                }
            }
        }
        if big == 0.0 {
            return Err(Error::Singular(k));
        }
        m.swap(k, pi);
        b.swap(k, pi);
        for row in m.iter_mut() {
            row.swap(k, pj);
        }
        cols.swap(k, pj);
        for i in k + 1..n {
            let l = m[i][k] / m[k][k];
            if l != 0.0 {
                for j in k..n {
                    m[i][j] -= l * m[k][j];
                }
                b[i] -= l * b[k];
            }
        }
    }
    let mut y = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|j| m[i][j] * y[j]).sum();
        y[i] = (b[i] - s) / m[i][i];
    }
    let mut x = vec![0.0; n];
    for (k, &c) in cols.iter().enumerate() {
        x[c] = y[k];
    }
    Ok(x)
}

/// Lower estimate of `‖B⁻¹‖_{2,p}` from `samples` random right-hand sides.
pub fn sampled_inverse_norm(b: &BlockMatrix, samples: usize, rng: &mut impl Rng) -> Result<f64> {
    let mut best = 0.0f64;
    for _ in 0..samples.max(1) {
        let x = random_unit_block_max(b.partition(), rng);
        let y = solve_general(b.matrix(), &x)?;
        best = best.max(block_max(&y, b.partition()));
    }
    Ok(best)
}

/// Solves the symmetric positive definite system `p x = rhs` by Cholesky.
pub fn cholesky_solve(p: &Matrix, rhs: &[f64]) -> Result<Vec<f64>> {
    let n = p.rows();
    let a = to_dense(p);
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i][k] * l[j][k]).sum();
            if i == j {
                let d = a[i][i] - s;
                if d <= 0.0 {
                    return Err(Error::Singular(i));
                }
                l[i][i] = d.sqrt();
            } else {
                l[i][j] = (a[i][j] - s) / l[j][j];
            }
        }
    }
    let mut y = vec![0.0; n];
    for i in 0..n {
        let s: f64 = (0..i).map(|k| l[i][k] * y[k]).sum();
        y[i] = (rhs[i] - s) / l[i][i];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| l[k][i] * x[k]).sum();
        x[i] = (y[i] - s) / l[i][i];
    }
    Ok(x)
}

/// `q_i(γ)` for one block row, computed from the raw sub-blocks of
/// `Q + α_i I` with this module's own eigen and norm routines.
#[derive(Debug, Clone)]
pub struct QiCurve {
    eigs: Vec<f64>,
    off_sum: f64,
    row_sum: f64,
}

impl QiCurve {
    pub fn new(q: &BlockMatrix, i: usize, alpha: f64) -> Result<Self> {
        let p = q.partition();
        let mut diag = sub(q.matrix(), p.offset(i), p.offset(i), p.size(i), p.size(i));
        for (k, row) in diag.iter_mut().enumerate() {
            row[k] += alpha;
        }
        let eigs = jacobi_max_pivot(diag.clone())?;
        let mut off_sum = 0.0;
        for j in (0..p.num_blocks()).filter(|&j| j != i) {
            off_sum += dense_spectral_norm(&sub(q.matrix(), p.offset(i), p.offset(j), p.size(i), p.size(j)))?;
        }
        let row_sum = off_sum + dense_spectral_norm(&diag)?;
        Ok(QiCurve { eigs, off_sum, row_sum })
    }

    pub fn eval(&self, gamma: f64) -> f64 {
        let diag = self.eigs.iter().map(|l| (1.0 - gamma * l).abs()).fold(0.0, f64::max);
        diag + gamma * self.off_sum
    }

    pub fn lambda_min(&self) -> f64 {
        self.eigs[0]
    }

    pub fn lambda_max(&self) -> f64 {
        *self.eigs.last().unwrap()
    }

    pub fn off_diagonal_sum(&self) -> f64 {
        self.off_sum
    }

    /// `Σ_j ‖(Q + αI)^[i]_j‖₂`.
    pub fn row_norm_sum(&self) -> f64 {
        self.row_sum
    }
}

/// Grid minimizer of `q_i` over `points` equally spaced stepsizes in `(0, upper]`.
pub fn grid_minimize_qi(curve: &QiCurve, upper: f64, points: usize) -> (f64, f64) {
    let h = upper / points as f64;
    (1..=points)
        .map(|k| {
            let g = h * k as f64;
            (g, curve.eval(g))
        })
        .fold((f64::NAN, f64::INFINITY), |best, c| if c.1 < best.1 { c } else { best })
}

/// `λ_min(A⁻¹Q)`, through the symmetric similar matrix `A^{-½} Q A^{-½}`.
pub fn lambda_min_regularized_ratio(q: &BlockMatrix, alphas_expanded: &[f64]) -> Result<f64> {
    let mut a = to_dense(q.matrix());
    let s: Vec<f64> = alphas_expanded.iter().map(|v| 1.0 / v.sqrt()).collect();
    for (i, row) in a.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v *= s[i] * s[j];
        }
    }
    Ok(jacobi_max_pivot(a)?[0])
}

/// Measured relative cost and solution error between the unregularized and
/// regularized unconstrained minimizers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RelativeErrors {
    /// `r = 0`: both minimizers are the origin and relative error is undefined.
    ExactSolution,
    Measured { cost: f64, solution: f64 },
}

/// Unconstrained minimizers `x̂ = −Q⁻¹r` and `x̂_A = −(Q + A)⁻¹r` by Cholesky.
pub fn exact_minimizers(qp: &QuadraticProgram, reg: &Regularization) -> Result<(Vec<f64>, Vec<f64>)> {
    let minus_r: Vec<f64> = qp.r().as_slice().iter().map(|v| -v).collect();
    let x = cholesky_solve(qp.q().matrix(), &minus_r)?;
    let mut p = qp.q().matrix().clone();
    p.add_diagonal(&reg.diagonal(qp.partition()));
    let xa = cholesky_solve(&p, &minus_r)?;
    Ok((x, xa))
}

/// `½ xᵀQx + rᵀx`, evaluated directly.
pub fn plain_objective(qp: &QuadraticProgram, x: &[f64]) -> f64 {
    let a = to_dense(qp.q().matrix());
    let qx = dense_matvec(&a, x);
    0.5 * x.iter().zip(&qx).map(|(p, q)| p * q).sum::<f64>() + qp.r().as_slice().iter().zip(x).map(|(p, q)| p * q).sum::<f64>()
}

/// Relative errors through cancellation-free identities: with
/// `d = x̂ − x̂_A = Q⁻¹A x̂_A`, `f(x̂_A) − f(x̂) = ½ dᵀQd` and `f(x̂) = ½ rᵀx̂`.
pub fn exact_relative_errors(qp: &QuadraticProgram, reg: &Regularization) -> Result<RelativeErrors> {
    if qp.r().as_slice().iter().all(|&v| v == 0.0) {
        return Ok(RelativeErrors::ExactSolution);
    }
    let (x, xa) = exact_minimizers(qp, reg)?;
    let a = reg.diagonal(qp.partition());
    let a_xa: Vec<f64> = a.iter().zip(&xa).map(|(p, q)| p * q).collect();
    let d = cholesky_solve(qp.q().matrix(), &a_xa)?;
    let qd = dense_matvec(&to_dense(qp.q().matrix()), &d);
    let gap = 0.5 * d.iter().zip(&qd).map(|(p, q)| p * q).sum::<f64>();
    let f = 0.5 * qp.r().as_slice().iter().zip(&x).map(|(p, q)| p * q).sum::<f64>();
    let p = qp.partition();
    Ok(RelativeErrors::Measured { cost: gap / f.abs(), solution: block_max(&d, p) / block_max(&x, p) })
}

/// Classical strict diagonal dominance `|b_kk| > Σ_{l≠k} |b_kl|` for every row.
pub fn classically_diagonally_dominant(b: &Matrix) -> bool {
    (0..b.rows()).all(|k| {
        let row = b.row(k);
        let off: f64 = row.iter().enumerate().filter(|&(l, _)| l != k).map(|(_, v)| v.abs()).sum();
        row[k].abs() > off
    })
}
