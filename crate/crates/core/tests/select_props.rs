mod common;

use abqp::generator::ConstraintKind;
use abqp::oracle::{grid_minimize_qi, QiCurve};
use abqp::select::{contraction_qi, optimal_stepsize, regularization_for_rate, stepsize_bound, BlockRates};
use abqp::{BlockMatrix, QuadraticProgram};
use common::*;
use proptest::prelude::*;
use rand::Rng;

const GRID: usize = 10_000;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn contraction_below_one_exactly_inside_bound(seed in any::<u64>()) {
        let qp = random_instance(seed, 6, 3, 15, ConstraintKind::Unconstrained);
        for i in 0..qp.num_blocks() {
            let info = qp.local_info(i);
            let curve = QiCurve::new(qp.q(), i, 0.0).unwrap();
            let bound = stepsize_bound(&info);
            prop_assert!((bound - 2.0 / curve.row_norm_sum()).abs() <= 1e-12 * bound);
            let h = 2.0 * bound / GRID as f64;
            for k in 1..=GRID {
                let g = h * k as f64;
                let ours = contraction_qi(&info, g) < 1.0;
                let oracle = curve.eval(g) < 1.0;
                if g < bound - h {
                    prop_assert!(ours && oracle, "γ = {} inside bound {}", g, bound);
                } else if g > bound + h {
                    prop_assert!(!ours && !oracle, "γ = {} outside bound {}", g, bound);
                }
            }
        }
    }

    #[test]
    fn optimal_stepsize_beats_grid(seed in any::<u64>()) {
        let qp = random_instance(seed, 6, 3, 15, ConstraintKind::Unconstrained);
        for i in 0..qp.num_blocks() {
            let info = qp.local_info(i);
            let curve = QiCurve::new(qp.q(), i, 0.0).unwrap();
            let bound = stepsize_bound(&info);
            let g_opt = optimal_stepsize(&info);
            let q_opt = contraction_qi(&info, g_opt);
            let (g_grid, q_grid) = grid_minimize_qi(&curve, bound, GRID);
            prop_assert!((g_grid - g_opt).abs() <= bound / GRID as f64 + 1e-12, "{} vs {}", g_grid, g_opt);
            prop_assert!(q_opt <= q_grid + 1e-12);
            prop_assert!((curve.eval(g_opt) - q_opt).abs() <= 1e-10);
        }
    }
}

#[test]
fn target_rate_is_met_when_recomputed() {
    for seed in 0..100 {
        let qp = random_instance(seed, 10, 3, 30, ConstraintKind::Unconstrained);
        for k in 1..=9 {
            let q_star = k as f64 / 10.0;
            let (rates, reg) = BlockRates::for_target_rate(&qp, q_star).unwrap();
            assert!(rates.stepsizes_valid());
            for i in 0..qp.num_blocks() {
                let q_a = QiCurve::new(qp.q(), i, reg.alpha(i)).unwrap().eval(rates.blocks[i].gamma);
                assert!(q_a <= q_star + 1e-12, "seed {seed}, q* {q_star}, block {i}: {q_a}");
            }
        }
    }
}

#[test]
fn contraction_strictly_decreases_in_alpha() {
    let mut r = rng(8);
    for seed in 0..50 {
        let qp = random_instance(seed, 6, 3, 15, ConstraintKind::Unconstrained);
        for i in 0..qp.num_blocks() {
            let info = qp.local_info(i);
            let mut prev = f64::INFINITY;
            let mut alpha = 0.0;
            for _ in 0..20 {
                alpha += r.random_range(0.01..2.0);
                let reg = info.regularized(alpha);
                let q = contraction_qi(&reg, optimal_stepsize(&reg));
                if info.off_diagonal_sum == 0.0 && info.lambda_max == info.lambda_min {
                    // uncoupled with a flat spectrum: q = 0 for every α
                    assert!(q < 1e-14);
                } else {
                    assert!(q < prev, "block {i} α {alpha}");
                }
                prev = q;
            }
        }
    }
}

#[test]
fn selection_reads_only_own_block_row() {
    for seed in 0..30 {
        let qp = random_instance(seed, 6, 2, 12, ConstraintKind::Unconstrained);
        let n = qp.num_blocks();
        if n < 3 {
            continue;
        }
        let p = qp.partition().clone();
        // halve the coupling between blocks 1 and 2, leaving block row 0 intact
        let mut m = qp.q().matrix().clone();
        for (a, b) in [(1, 2), (2, 1)] {
            for u in p.range(a) {
                for v in p.range(b) {
                    m[(u, v)] *= 0.5;
                }
            }
        }
        let other = QuadraticProgram::unconstrained(BlockMatrix::new(m, p.clone()).unwrap(), qp.r().clone()).unwrap();
        let (a, b) = (qp.local_info(0), other.local_info(0));
        assert_eq!(a, b);
        assert_eq!(stepsize_bound(&a), stepsize_bound(&b));
        assert_eq!(optimal_stepsize(&a), optimal_stepsize(&b));
        assert_eq!(regularization_for_rate(&a, 0.3).unwrap(), regularization_for_rate(&b, 0.3).unwrap());
        assert_ne!(qp.local_info(1), other.local_info(1));
    }
}

#[test]
fn target_rate_rejects_endpoints() {
    let qp = two_block([-1.0, -1.0], vec![abqp::ConstraintSet::Unconstrained; 2]);
    assert!(BlockRates::for_target_rate(&qp, 0.0).is_err());
    assert!(BlockRates::for_target_rate(&qp, 1.0).is_err());
    let (rates, reg) = BlockRates::for_target_rate(&qp, 0.25).unwrap();
    assert_eq!(reg.alphas(), &[2.0, 2.0]);
    assert_eq!(rates.gammas(), vec![0.25, 0.25]);
    assert_eq!(abqp::select::network_q(&rates), 0.25);
}
