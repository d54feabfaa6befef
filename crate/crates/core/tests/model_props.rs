mod common;

use abqp::generator::ConstraintKind;
use abqp::linalg::{dot, norm2, BlockVector};
use abqp::model::project_block;
use abqp::oracle::{exact_minimizers, full_symmetric_eigensolve, plain_objective};
use abqp::{ConstraintSet, QuadraticProgram, Regularization};
use common::*;
use proptest::prelude::*;
use rand::Rng;

fn random_reg(r: &mut rand_chacha::ChaCha8Rng, n: usize) -> Regularization {
    Regularization::new((0..n).map(|_| if r.random_bool(0.2) { 0.0 } else { r.random_range(0.0..3.0) }).collect()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn strong_convexity(seed in any::<u64>()) {
        let qp = random_instance(seed, 8, 3, 20, ConstraintKind::Unconstrained);
        let mut r = rng(seed);
        let lmin = full_symmetric_eigensolve(qp.q().matrix()).unwrap()[0];
        prop_assert!(lmin > 0.0);
        for _ in 0..20 {
            let x = gaussian_vec(&mut r, qp.dim());
            let y = gaussian_vec(&mut r, qp.dim());
            let grad: Vec<f64> = (0..qp.num_blocks()).flat_map(|i| qp.gradient_block(&x, i, None).unwrap()).collect();
            let d: Vec<f64> = y.iter().zip(&x).map(|(a, b)| a - b).collect();
            let lhs = qp.objective(&y, None).unwrap();
            let rhs = qp.objective(&x, None).unwrap() + dot(&grad, &d) + 0.5 * lmin * dot(&d, &d);
            prop_assert!(lhs >= rhs - 1e-9 * (1.0 + lhs.abs()));
        }
    }

    #[test]
    fn gradient_matches_finite_differences(seed in any::<u64>()) {
        let qp = random_instance(seed, 6, 3, 15, ConstraintKind::Unconstrained);
        let mut r = rng(seed);
        let reg = random_reg(&mut r, qp.num_blocks());
        let x = gaussian_vec(&mut r, qp.dim());
        let h = 1e-5;
        for use_reg in [None, Some(&reg)] {
            for i in 0..qp.num_blocks() {
                let g = qp.gradient_block(&x, i, use_reg).unwrap();
                for (k, gk) in g.iter().enumerate() {
                    let idx = qp.partition().offset(i) + k;
                    let mut up = x.clone();
                    let mut down = x.clone();
                    up[idx] += h;
                    down[idx] -= h;
                    let fd = (qp.objective(&up, use_reg).unwrap() - qp.objective(&down, use_reg).unwrap()) / (2.0 * h);
                    prop_assert!((fd - gk).abs() <= 1e-6 * (1.0 + gk.abs()), "{} vs {}", fd, gk);
                }
            }
        }
    }

    #[test]
    fn regularized_cost_sits_between(seed in any::<u64>()) {
        let qp = random_instance(seed, 8, 3, 25, ConstraintKind::Unconstrained);
        let mut r = rng(seed);
        let reg = random_reg(&mut r, qp.num_blocks());
        let (x, xa) = exact_minimizers(&qp, &reg).unwrap();
        let f = plain_objective(&qp, &x);
        let fa = plain_objective(&qp, &xa);
        prop_assert!(f <= fa + 1e-12 * f.abs());
        prop_assert!(fa <= 1e-15);
    }

    #[test]
    fn json_round_trip_is_bit_exact(seed in any::<u64>()) {
        let mut r = rng(seed);
        let qp = random_instance(seed, 5, 3, 12, ConstraintKind::Box { half_width: r.random_range(0.1..3.0) });
        let back = QuadraticProgram::from_json(&qp.to_json().unwrap()).unwrap();
        prop_assert_eq!(back.q().matrix().as_slice(), qp.q().matrix().as_slice());
        prop_assert_eq!(back.r().as_slice(), qp.r().as_slice());
        prop_assert_eq!(back.constraints(), qp.constraints());
    }
}

#[test]
fn projection_is_nonexpansive() {
    let mut r = rng(17);
    for trial in 0..1000 {
        let n = r.random_range(1..6);
        let set = match trial % 3 {
            0 => {
                let lower: Vec<f64> = (0..n).map(|_| r.random_range(-2.0..0.0)).collect();
                let upper: Vec<f64> = lower.iter().map(|l| l + r.random_range(0.0..3.0)).collect();
                ConstraintSet::Box { lower, upper }
            }
            1 => ConstraintSet::Ball { center: gaussian_vec(&mut r, n), radius: r.random_range(0.0..2.0) },
            _ => ConstraintSet::Unconstrained,
        };
        let u: Vec<f64> = gaussian_vec(&mut r, n).iter().map(|v| 3.0 * v).collect();
        let v: Vec<f64> = gaussian_vec(&mut r, n).iter().map(|v| 3.0 * v).collect();
        let pu = project_block(&set, &u);
        let pv = project_block(&set, &v);
        assert!(set.contains(&pu, 1e-12) && set.contains(&pv, 1e-12));
        let d_in: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a - b).collect();
        let d_out: Vec<f64> = pu.iter().zip(&pv).map(|(a, b)| a - b).collect();
        assert!(norm2(&d_out) <= norm2(&d_in) * (1.0 + 1e-12) + 1e-15);
    }
}

#[test]
fn exact_minimizer_residual_up_to_300() {
    for (k, &n_blocks) in [10usize, 60, 150, 300].iter().enumerate() {
        let config = abqp::generator::GeneratorConfig::new(n_blocks, 0.9, k as u64);
        let qp = abqp::generator::generate(&config).unwrap();
        let x = qp.exact_unconstrained_minimizer(None).unwrap();
        let res: Vec<f64> = qp.q().matrix().matvec(x.as_slice()).iter().zip(qp.r().as_slice()).map(|(a, b)| a + b).collect();
        let rn = abqp::linalg::block_max_norm(&res, qp.partition());
        assert!(rn <= 1e-10 * (1.0 + qp.r().block_max_norm()), "n = {n_blocks}: {rn}");
    }
}

#[test]
fn centralized_matches_exact_when_unconstrained() {
    for seed in 0..20 {
        let qp = random_instance(seed, 8, 3, 20, ConstraintKind::Unconstrained);
        let reg = random_reg(&mut rng(seed), qp.num_blocks());
        let a = qp.centralized_minimizer(Some(&reg)).unwrap();
        let b = qp.exact_unconstrained_minimizer(Some(&reg)).unwrap();
        assert!(a.block_max_distance(&b) <= 1e-9, "seed {seed}");
    }
}

#[test]
fn clipped_minimizer_matches_grid_search() {
    let qp = two_block([-1.0, -1.0], vec![ConstraintSet::symmetric_box(1, 0.25); 2]);
    let x = qp.centralized_minimizer(None).unwrap();
    let (mut best, mut arg) = (f64::INFINITY, (0.0, 0.0));
    for a in 0..=500 {
        for b in 0..=500 {
            let p = [-0.25 + a as f64 * 1e-3, -0.25 + b as f64 * 1e-3];
            let f = plain_objective(&qp, &p);
            if f < best {
                best = f;
                arg = (p[0], p[1]);
            }
        }
    }
    assert!((x.as_slice()[0] - arg.0).abs() <= 1e-3 && (x.as_slice()[1] - arg.1).abs() <= 1e-3);
    assert!((x.as_slice()[0] - 0.25).abs() < 1e-12 && (x.as_slice()[1] - 0.25).abs() < 1e-12);
}

#[test]
fn constrained_minimizer_satisfies_projection_fixed_point() {
    let mut r = rng(99);
    for seed in 0..20 {
        let qp = with_random_boxes(&random_instance(seed, 8, 3, 20, ConstraintKind::Unconstrained), &mut r);
        let x = qp.centralized_minimizer(None).unwrap();
        assert!(qp.contains(&x, 0.0));
        // x = Π_X[x − γ∇f(x)] for any γ > 0
        let g: Vec<f64> = (0..qp.num_blocks()).flat_map(|i| qp.gradient_block(x.as_slice(), i, None).unwrap()).collect();
        let stepped: Vec<f64> = x.as_slice().iter().zip(&g).map(|(a, b)| a - 0.1 * b).collect();
        let back = qp.project(&BlockVector::new(stepped, qp.partition().clone()).unwrap());
        assert!(back.block_max_distance(&x) <= 1e-10, "seed {seed}");
    }
}
