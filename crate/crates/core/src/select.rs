//! Independent per-block stepsize and regularization selection.
//!
//! Every rule here takes a [`LocalBlockInfo`] for a single block row, so
//! agent `i`'s choice can only depend on `Q^[i]`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{LocalBlockInfo, QuadraticProgram, Regularization};

/// Supremum of stepsizes for which block `i` contracts: `2 / Σ_j ‖Q^[i]_j‖₂`.
pub fn stepsize_bound(info: &LocalBlockInfo) -> f64 {
    2.0 / info.row_norm_sum
}

/// `q_i = ‖I − γQ^[i]_i‖₂ + γ Σ_{j≠i} ‖Q^[i]_j‖₂`, with the first term taken
/// from the spectrum ends of the (positive definite) diagonal block.
pub fn contraction_qi(info: &LocalBlockInfo, gamma: f64) -> f64 {
    let diag = (1.0 - gamma * info.lambda_min).abs().max((1.0 - gamma * info.lambda_max).abs());
    diag + gamma * info.off_diagonal_sum
}

/// Stepsize minimizing `q_i`: `2 / (λ_max + λ_min)`.
pub fn optimal_stepsize(info: &LocalBlockInfo) -> f64 {
    2.0 / (info.lambda_max + info.lambda_min)
}

/// `q_i` at the optimal stepsize, in closed form.
pub fn optimal_contraction(info: &LocalBlockInfo) -> f64 {
    (2.0 * info.off_diagonal_sum + info.lambda_max - info.lambda_min) / (info.lambda_max + info.lambda_min)
}

/// Smallest regularization (and matching stepsize) that brings `q_i` down to
/// `q_star`. Returns `α_i = 0` when the block is already fast enough.
pub fn regularization_for_rate(info: &LocalBlockInfo, q_star: f64) -> Result<(f64, f64)> {
    if !(q_star > 0.0 && q_star < 1.0) {
        return Err(Error::param("q_star", format!("{q_star} must lie strictly inside (0, 1)")));
    }
    let q_i = optimal_contraction(info);
    let spread = info.lambda_max + info.lambda_min;
    let alpha = ((q_i / q_star - 1.0) * spread / 2.0).max(0.0);
    Ok((alpha, 2.0 / (spread + 2.0 * alpha)))
}

/// `q = max_i q_i`.
pub fn network_q(rates: &BlockRates) -> f64 {
    rates.blocks.iter().map(|b| b.q).fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockRate {
    /// Stepsize bound for the (possibly regularized) block row.
    pub gamma_bound: f64,
    /// Optimal stepsize for the (possibly regularized) block row.
    pub gamma_opt: f64,
    /// Stepsize in use.
    pub gamma: f64,
    pub alpha: f64,
    /// Contraction factor at `gamma`.
    pub q: f64,
}

/// Per-block stepsizes, regularizations and contraction factors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockRates {
    pub blocks: Vec<BlockRate>,
    pub q: f64,
}

impl BlockRates {
    fn from_blocks(blocks: Vec<BlockRate>) -> Self {
        let q = blocks.iter().map(|b| b.q).fold(0.0, f64::max);
        BlockRates { blocks, q }
    }

    fn block(info: &LocalBlockInfo, alpha: f64, gamma: Option<f64>) -> BlockRate {
        let reg = info.regularized(alpha);
        let gamma_opt = optimal_stepsize(&reg);
        let gamma = gamma.unwrap_or(gamma_opt);
        BlockRate { gamma_bound: stepsize_bound(&reg), gamma_opt, gamma, alpha, q: contraction_qi(&reg, gamma) }
    }

    /// Optimal stepsizes on the unregularized problem.
    pub fn optimal(qp: &QuadraticProgram) -> Self {
        Self::from_blocks((0..qp.num_blocks()).map(|i| Self::block(&qp.local_info(i), 0.0, None)).collect())
    }

    /// Optimal stepsizes on `Q + A`.
    pub fn for_regularization(qp: &QuadraticProgram, reg: &Regularization) -> Result<Self> {
        check_len(qp, reg.num_blocks())?;
        Ok(Self::from_blocks(
            (0..qp.num_blocks()).map(|i| Self::block(&qp.local_info(i), reg.alpha(i), None)).collect(),
        ))
    }

    /// Caller-chosen stepsizes, optionally on `Q + A`.
    pub fn with_stepsizes(qp: &QuadraticProgram, gammas: &[f64], reg: Option<&Regularization>) -> Result<Self> {
        check_len(qp, gammas.len())?;
        if let Some(a) = reg {
            check_len(qp, a.num_blocks())?;
        }
        if let Some(g) = gammas.iter().find(|g| !(g.is_finite() && **g > 0.0)) {
            return Err(Error::param("gamma", format!("{g} must be positive")));
        }
        Ok(Self::from_blocks(
            (0..qp.num_blocks())
                .map(|i| Self::block(&qp.local_info(i), reg.map_or(0.0, |a| a.alpha(i)), Some(gammas[i])))
                .collect(),
        ))
    }

    /// Regularizations and stepsizes giving `q_A ≤ q_star`, each block choosing
    /// from its own row only.
    pub fn for_target_rate(qp: &QuadraticProgram, q_star: f64) -> Result<(Self, Regularization)> {
        let mut blocks = Vec::with_capacity(qp.num_blocks());
        let mut alphas = Vec::with_capacity(qp.num_blocks());
        for i in 0..qp.num_blocks() {
            let info = qp.local_info(i);
            let (alpha, gamma) = regularization_for_rate(&info, q_star)?;
            alphas.push(alpha);
            blocks.push(Self::block(&info, alpha, Some(gamma)));
        }
        Ok((Self::from_blocks(blocks), Regularization::new(alphas)?))
    }

    pub fn gammas(&self) -> Vec<f64> {
        self.blocks.iter().map(|b| b.gamma).collect()
    }

    pub fn regularization(&self) -> Regularization {
        Regularization::new(self.blocks.iter().map(|b| b.alpha).collect()).expect("alphas are nonnegative")
    }

    /// Every stepsize lies strictly inside its contraction bound.
    pub fn stepsizes_valid(&self) -> bool {
        self.blocks.iter().all(|b| b.gamma > 0.0 && b.gamma < b.gamma_bound)
    }
}

fn check_len(qp: &QuadraticProgram, len: usize) -> Result<()> {
    if len != qp.num_blocks() {
        return Err(Error::DimensionMismatch { expected: qp.num_blocks(), actual: len });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn info(lmin: f64, lmax: f64, off: f64) -> LocalBlockInfo {
        LocalBlockInfo { lambda_min: lmin, lambda_max: lmax, off_diagonal_sum: off, row_norm_sum: lmax + off }
    }

    const COUPLED: LocalBlockInfo =
        LocalBlockInfo { lambda_min: 2.0, lambda_max: 2.0, off_diagonal_sum: 1.0, row_norm_sum: 3.0 };

    #[test]
    fn stepsize_bound_examples() {
        assert_eq!(stepsize_bound(&COUPLED), 2.0 / 3.0);
        assert_eq!(stepsize_bound(&info(1.0, 1.0, 0.0)), 2.0);
        // single 2×2 block [[2,1],[1,2]]: eigenvalues 1 and 3
        assert_eq!(stepsize_bound(&info(1.0, 3.0, 0.0)), 2.0 / 3.0);
    }

    #[test]
    fn contraction_examples() {
        assert_eq!(contraction_qi(&COUPLED, 0.5), 0.5);
        assert!((contraction_qi(&COUPLED, 1e-12) - 1.0).abs() < 1e-11);
        assert_eq!(contraction_qi(&info(1.0, 1.0, 0.0), 1.0), 0.0);
    }

    #[test]
    fn optimal_stepsize_examples() {
        assert_eq!(optimal_stepsize(&info(2.0, 2.0, 0.0)), 0.5);
        assert_eq!(optimal_stepsize(&info(1.0, 1.0, 0.0)), 1.0);
        assert_eq!(optimal_stepsize(&info(1.0, 3.0, 0.0)), 0.5);
    }

    #[test]
    fn closed_form_matches_contraction_at_optimum() {
        let b = info(1.5, 4.0, 0.7);
        assert!((optimal_contraction(&b) - contraction_qi(&b, optimal_stepsize(&b))).abs() < 1e-15);
    }

    #[test]
    fn regularization_for_rate_example() {
        let (alpha, gamma) = regularization_for_rate(&COUPLED, 0.25).unwrap();
        assert_eq!((alpha, gamma), (2.0, 0.25));
        assert_eq!(contraction_qi(&COUPLED.regularized(alpha), gamma), 0.25);
    }

    #[test]
    fn no_regularization_when_already_fast() {
        assert_eq!(regularization_for_rate(&COUPLED, 0.6).unwrap().0, 0.0);
        assert_eq!(regularization_for_rate(&COUPLED, 0.5).unwrap().0, 0.0);
        let (a, _) = regularization_for_rate(&COUPLED, 0.5 - 1e-9).unwrap();
        assert!(a > 0.0 && a < 1e-7);
    }

    #[test]
    fn q_star_endpoints_rejected() {
        for q in [0.0, 1.0, -0.5, 1.5, f64::NAN] {
            assert!(regularization_for_rate(&COUPLED, q).is_err());
        }
    }

    #[test]
    fn network_q_is_max() {
        let mk = |q| BlockRate { gamma_bound: 1.0, gamma_opt: 0.5, gamma: 0.5, alpha: 0.0, q };
        assert_eq!(network_q(&BlockRates::from_blocks(vec![mk(0.5), mk(0.5)])), 0.5);
        assert_eq!(network_q(&BlockRates::from_blocks(vec![mk(0.2), mk(0.9)])), 0.9);
    }
}
