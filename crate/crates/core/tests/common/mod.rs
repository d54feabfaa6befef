#![allow(dead_code)]

use abqp::generator::{generate, ConstraintKind, GeneratorConfig};
use abqp::{BlockMatrix, BlockPartition, BlockVector, ConstraintSet, Matrix, QuadraticProgram};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_partition(rng: &mut ChaCha8Rng, max_blocks: usize, max_size: usize, max_dim: usize) -> BlockPartition {
    let n = rng.random_range(1..=max_blocks);
    let mut sizes = Vec::with_capacity(n);
    let mut total = 0;
    for _ in 0..n {
        let s = rng.random_range(1..=max_size);
        if total + s > max_dim && !sizes.is_empty() {
            break;
        }
        sizes.push(s);
        total += s;
    }
    BlockPartition::new(sizes).unwrap()
}

pub fn gaussian(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix {
    Matrix::from_row_major(rows, cols, (0..rows * cols).map(|_| rng.sample(StandardNormal)).collect()).unwrap()
}

pub fn gaussian_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

pub fn symmetrize(m: &Matrix) -> Matrix {
    let t = m.transpose();
    let n = m.rows();
    let mut out = Matrix::zeros(n, n);
    for a in 0..n {
        for b in 0..n {
            out[(a, b)] = 0.5 * (m[(a, b)] + t[(a, b)]);
        }
    }
    out
}

/// Random symmetric matrix made strictly block diagonally dominant by adding
/// a multiple of the identity derived from crude norm bounds.
pub fn random_dominant_symmetric(rng: &mut ChaCha8Rng, p: &BlockPartition) -> BlockMatrix {
    let n = p.dim();
    let mut m = symmetrize(&gaussian(rng, n, n));
    // Frobenius norms bound spectral norms from above
    let mut shift = 0.0f64;
    for i in 0..p.num_blocks() {
        let mut row = 0.0;
        for j in 0..p.num_blocks() {
            let b = m.submatrix(p.offset(i), p.offset(j), p.size(i), p.size(j));
            row += b.as_slice().iter().map(|v| v * v).sum::<f64>().sqrt();
        }
        shift = shift.max(row);
    }
    let extra = rng.random_range(0.05..2.0);
    m.add_diagonal(&vec![shift + extra; n]);
    BlockMatrix::new(m, p.clone()).unwrap()
}

/// Random nonsymmetric strictly block diagonally dominant matrix.
pub fn random_dominant_general(rng: &mut ChaCha8Rng, p: &BlockPartition) -> BlockMatrix {
    let n = p.dim();
    let mut m = gaussian(rng, n, n);
    let mut shift = 0.0f64;
    for i in 0..p.num_blocks() {
        let mut row = 0.0;
        for j in 0..p.num_blocks() {
            let b = m.submatrix(p.offset(i), p.offset(j), p.size(i), p.size(j));
            row += b.as_slice().iter().map(|v| v * v).sum::<f64>().sqrt();
        }
        shift = shift.max(row);
    }
    let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
    m.add_diagonal(&vec![sign * (shift + rng.random_range(0.05..2.0)); n]);
    BlockMatrix::new(m, p.clone()).unwrap()
}

/// Generated instance with random sizes, target and eigenvalue spread.
pub fn random_instance(seed: u64, max_blocks: usize, max_size: usize, max_dim: usize, constraints: ConstraintKind) -> QuadraticProgram {
    let mut r = rng(seed ^ 0x9e37_79b9_7f4a_7c15);
    let p = random_partition(&mut r, max_blocks, max_size, max_dim);
    let q_target = r.random_range(0.35..0.98);
    let lo = r.random_range(0.5..5.0);
    let spread = if p.sizes().iter().all(|&s| s == 1) { r.random_range(1.0..10.0) } else { r.random_range(1.0..1.5) };
    let config = GeneratorConfig {
        num_blocks: p.num_blocks(),
        block_sizes: Some(p.sizes().to_vec()),
        q_target,
        eig_range: (lo, lo * spread),
        seed,
        constraints,
    };
    generate(&config).unwrap()
}

/// Replaces every constraint with a random box around (or cutting through)
/// the origin-centred region the minimizer lives in.
pub fn with_random_boxes(qp: &QuadraticProgram, rng: &mut ChaCha8Rng) -> QuadraticProgram {
    let p = qp.partition();
    let constraints = (0..p.num_blocks())
        .map(|i| {
            let lower: Vec<f64> = (0..p.size(i)).map(|_| -rng.random_range(0.01..1.0)).collect();
            let upper: Vec<f64> = (0..p.size(i)).map(|_| rng.random_range(0.01..1.0)).collect();
            ConstraintSet::Box { lower, upper }
        })
        .collect();
    QuadraticProgram::new(qp.q().clone(), qp.r().clone(), constraints).unwrap()
}

pub fn vector(p: &BlockPartition, data: Vec<f64>) -> BlockVector {
    BlockVector::new(data, p.clone()).unwrap()
}

pub fn two_block(r: [f64; 2], constraints: Vec<ConstraintSet>) -> QuadraticProgram {
    let p = BlockPartition::new(vec![1, 1]).unwrap();
    let q = BlockMatrix::new(Matrix::from_rows(&[[2.0, 1.0], [1.0, 2.0]]), p.clone()).unwrap();
    QuadraticProgram::new(q, vector(&p, r.to_vec()), constraints).unwrap()
}
