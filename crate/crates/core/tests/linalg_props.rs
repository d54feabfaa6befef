mod common;

use abqp::linalg::{block_max_norm, spectral_norm, symmetric_extreme_eigs, BlockMatrix, BlockPartition, Matrix};
use abqp::oracle::{classically_diagonally_dominant, full_symmetric_eigensolve, sampled_induced_norm, sampled_inverse_norm};
use common::*;
use proptest::prelude::*;
use rand::Rng;

fn unit_block_max(rng: &mut rand_chacha::ChaCha8Rng, p: &BlockPartition) -> Vec<f64> {
    let mut x = gaussian_vec(rng, p.dim());
    let n = block_max_norm(&x, p);
    x.iter_mut().for_each(|v| *v /= n);
    x
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn induced_norm_bound_dominates_samples(seed in any::<u64>()) {
        let mut r = rng(seed);
        let p = random_partition(&mut r, 6, 4, 20);
        let b = BlockMatrix::new(gaussian(&mut r, p.dim(), p.dim()), p.clone()).unwrap();
        let bound = b.induced_norm_upper_bound().unwrap();
        for _ in 0..1000 {
            let x = unit_block_max(&mut r, &p);
            let bx = b.matrix().matvec(&x);
            prop_assert!(block_max_norm(&bx, &p) <= bound * (1.0 + 1e-12));
        }
        prop_assert!(sampled_induced_norm(&b, 200, &mut r) <= bound * (1.0 + 1e-12));
    }

    #[test]
    fn gershgorin_bound_is_below_lambda_min(seed in any::<u64>()) {
        let mut r = rng(seed);
        let p = random_partition(&mut r, 8, 4, 30);
        let b = random_dominant_symmetric(&mut r, &p);
        let lower = b.gershgorin_lambda_min_bound().unwrap();
        let eig = full_symmetric_eigensolve(b.matrix()).unwrap();
        prop_assert!(lower <= eig[0] + 1e-10, "{} > {}", lower, eig[0]);
    }

    #[test]
    fn inverse_norm_bound_dominates_samples(seed in any::<u64>()) {
        let mut r = rng(seed);
        let p = random_partition(&mut r, 6, 4, 20);
        let b = if r.random_bool(0.5) { random_dominant_symmetric(&mut r, &p) } else { random_dominant_general(&mut r, &p) };
        prop_assert!(b.is_strictly_block_diag_dominant());
        let bound = b.inverse_norm_bound().unwrap();
        let est = sampled_inverse_norm(&b, 500, &mut r).unwrap();
        prop_assert!(est <= bound * (1.0 + 1e-10), "{} > {}", est, bound);
    }

    #[test]
    fn scalar_partition_matches_classical_dominance(seed in any::<u64>()) {
        let mut r = rng(seed);
        let n = r.random_range(1..8);
        let mut m = gaussian(&mut r, n, n);
        // push roughly half the cases across the dominance threshold
        let shift = r.random_range(0.0..2.0 * n as f64);
        m.add_diagonal(&vec![shift; n]);
        let b = BlockMatrix::new(m.clone(), BlockPartition::uniform(n, 1).unwrap()).unwrap();
        prop_assert_eq!(b.is_strictly_block_diag_dominant(), classically_diagonally_dominant(&m));
    }

    #[test]
    fn extreme_eigs_match_oracle(seed in any::<u64>()) {
        let mut r = rng(seed);
        let n = r.random_range(1..12);
        let m = symmetrize(&gaussian(&mut r, n, n));
        let (lo, hi) = symmetric_extreme_eigs(&m).unwrap();
        let all = full_symmetric_eigensolve(&m).unwrap();
        prop_assert!((lo - all[0]).abs() < 1e-10);
        prop_assert!((hi - all[n - 1]).abs() < 1e-10);
    }
}

#[test]
fn classical_dominance_agreement_over_500_cases() {
    let mut r = rng(500);
    let mut agree = 0;
    let mut dominant = 0;
    for _ in 0..500 {
        let n = r.random_range(1..8);
        let mut m = gaussian(&mut r, n, n);
        m.add_diagonal(&vec![r.random_range(0.0..2.0 * n as f64); n]);
        let b = BlockMatrix::new(m.clone(), BlockPartition::uniform(n, 1).unwrap()).unwrap();
        let ours = b.is_strictly_block_diag_dominant();
        dominant += ours as usize;
        agree += (ours == classically_diagonally_dominant(&m)) as usize;
    }
    assert_eq!(agree, 500);
    assert!(dominant > 50 && dominant < 450, "sample should straddle the threshold: {dominant}");
}

#[test]
fn spectral_norm_closed_forms() {
    let mut r = rng(3);
    for _ in 0..300 {
        // 2×2: σ_max² = (s + √(s² − 4 det²)) / 2 with s the squared Frobenius norm
        let m = gaussian(&mut r, 2, 2);
        let (a, b, c, d) = (m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
        let s = a * a + b * b + c * c + d * d;
        let det = a * d - b * c;
        let exact = ((s + (s * s - 4.0 * det * det).max(0.0).sqrt()) / 2.0).sqrt();
        assert!((spectral_norm(&m).unwrap() - exact).abs() <= 1e-8 * exact.max(1.0));

        // rank one: ‖u vᵀ‖ = ‖u‖ ‖v‖
        let (rows, cols) = (r.random_range(1..=3), r.random_range(1..=3));
        let u = gaussian_vec(&mut r, rows);
        let v = gaussian_vec(&mut r, cols);
        let mut uv = Matrix::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                uv[(i, j)] = u[i] * v[j];
            }
        }
        let exact = u.iter().map(|x| x * x).sum::<f64>().sqrt() * v.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!((spectral_norm(&uv).unwrap() - exact).abs() <= 1e-8 * exact.max(1.0));

        // scaled permutation: largest |d_k|
        let dvals = gaussian_vec(&mut r, 3);
        let mut pm = Matrix::zeros(3, 3);
        pm[(0, 2)] = dvals[0];
        pm[(1, 0)] = dvals[1];
        pm[(2, 1)] = dvals[2];
        let exact = dvals.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
        assert!((spectral_norm(&pm).unwrap() - exact).abs() <= 1e-8 * exact.max(1.0));
    }
}

#[test]
fn indefinite_diagonal_blocks_use_inverse_norm() {
    let p = BlockPartition::new(vec![2, 1]).unwrap();
    let m = Matrix::from_rows(&[[-3.0, 0.0, 0.5], [0.0, 2.0, 0.5], [0.5, 0.5, 4.0]]);
    let b = BlockMatrix::new(m, p).unwrap();
    let off = (0.5f64 * 0.5 + 0.5 * 0.5).sqrt();
    assert!((b.delta(0).unwrap() - (2.0 - off)).abs() < 1e-12);
    assert!((b.delta(1).unwrap() - (4.0 - off)).abs() < 1e-12);
}
