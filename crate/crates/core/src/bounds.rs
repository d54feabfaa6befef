//! Error caused by regularizing: descriptive absolute bounds for the
//! set-constrained problem and independent selection rules that cap the
//! relative error of the unconstrained problem.
//!
//! Blocks with `α_i = 0` are treated as the limit `α_i → 0⁺`: their term
//! `1 + δ_i/α_i` is `+∞` and drops out of every minimum below.

use crate::error::{Error, Result};
use crate::linalg::norm2;
use crate::model::{QuadraticProgram, Regularization};

fn check(qp: &QuadraticProgram, reg: &Regularization) -> Result<()> {
    if reg.num_blocks() != qp.num_blocks() {
        return Err(Error::DimensionMismatch { expected: qp.num_blocks(), actual: reg.num_blocks() });
    }
    Ok(())
}

/// `β_p(I + A⁻¹Q) = min_i (1 + δ_i(Q)/α_i)`; `+∞` when no block regularizes.
pub fn beta_regularized(qp: &QuadraticProgram, reg: &Regularization) -> Result<f64> {
    check(qp, reg)?;
    Ok(qp
        .deltas()
        .iter()
        .zip(reg.alphas())
        .filter(|(_, &a)| a > 0.0)
        .map(|(d, a)| 1.0 + d / a)
        .fold(f64::INFINITY, f64::min))
}

/// `β_p(Q) = min_i δ_i(Q)`.
pub fn beta(qp: &QuadraticProgram) -> f64 {
    qp.deltas().iter().copied().fold(f64::INFINITY, f64::min)
}

/// Bound on `‖Π_X[x̂] − Π_X[x̂_A]‖_{2,p}`:
/// `max_i ‖r^[i]‖₂ / (β_p(I + A⁻¹Q) β_p(Q))`.
pub fn absolute_state_error_bound(qp: &QuadraticProgram, reg: &Regularization) -> Result<f64> {
    let b_reg = beta_regularized(qp, reg)?;
    let r_max = qp.r().block_max_norm();
    if b_reg.is_infinite() || r_max == 0.0 {
        return Ok(0.0);
    }
    Ok(r_max / (b_reg * beta(qp)))
}

/// Bound on `|f(Π_X[x̂]) − f(Π_X[x̂_A])|`:
/// `(max_i M_{X_i} · max_i Σ_j ‖Q^[i]_j‖₂ + Σ_i ‖r^[i]‖₂) · Δ`, with `Δ` from
/// [`absolute_state_error_bound`] and `M_{X_i} = max_{x ∈ X_i} ‖x‖₂`.
pub fn absolute_cost_error_bound(qp: &QuadraticProgram, reg: &Regularization) -> Result<f64> {
    check(qp, reg)?;
    let mut m_max = 0.0f64;
    for (i, c) in qp.constraints().iter().enumerate() {
        m_max = m_max.max(c.max_norm().ok_or(Error::Unbounded(i))?);
    }
    let r_sum: f64 = (0..qp.num_blocks()).map(|i| norm2(qp.r().block(i))).sum();
    let state = absolute_state_error_bound(qp, reg)?;
    Ok((m_max * qp.norm_table().max_row_sum() + r_sum) * state)
}

fn open_unit(name: &'static str, v: f64) -> Result<()> {
    if !(v > 0.0 && v < 1.0) {
        return Err(Error::param(name, format!("{v} must lie strictly inside (0, 1)")));
    }
    Ok(())
}

/// Largest `α_i` keeping the relative cost error within `epsilon`:
/// `√ε/(1 − √ε) · δ_i(Q)`.
pub fn regularization_for_relative_cost_error(epsilon: f64, delta_i: f64) -> Result<f64> {
    open_unit("epsilon", epsilon)?;
    let s = epsilon.sqrt();
    Ok(s / (1.0 - s) * delta_i)
}

/// Largest `α_i` keeping the relative solution error within `eta`:
/// `η/(1 − η) · δ_i(Q)`.
pub fn regularization_for_relative_solution_error(eta: f64, delta_i: f64) -> Result<f64> {
    open_unit("eta", eta)?;
    Ok(eta / (1.0 - eta) * delta_i)
}

/// `m = max_i α_i / δ_i(Q)`.
fn max_alpha_over_delta(qp: &QuadraticProgram, reg: &Regularization) -> Result<f64> {
    check(qp, reg)?;
    Ok(reg.alphas().iter().zip(qp.deltas()).map(|(a, d)| a / d).fold(0.0, f64::max))
}

/// Smallest `ε` whose cost-error rule admits every `α_i`: `(m/(1+m))²`.
pub fn epsilon_implied_by_regularization(qp: &QuadraticProgram, reg: &Regularization) -> Result<f64> {
    Ok(epsilon_from_ratio(max_alpha_over_delta(qp, reg)?))
}

/// `(m/(1+m))²`, the inverse of the cost-error rule at ratio `m = α/δ`.
pub fn epsilon_from_ratio(m: f64) -> f64 {
    if m.is_infinite() {
        return 1.0;
    }
    (m / (1.0 + m)).powi(2)
}

/// Bound `1 / min_i (1 + δ_i(Q)/α_i)` on the relative solution error.
pub fn relative_solution_error_bound(qp: &QuadraticProgram, reg: &Regularization) -> Result<f64> {
    Ok(1.0 / beta_regularized(qp, reg)?)
}
