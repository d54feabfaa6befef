use serde::{Deserialize, Serialize};

use crate::linalg::norm2;

/// Per-block constraint set `X_i`.
///
/// `Box` and `Ball` are non-empty, compact and convex. `Unconstrained` is
/// `ℝ^{n_i}` and is only meaningful for the unconstrained relative-error rules.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum ConstraintSet {
    Box { lower: Vec<f64>, upper: Vec<f64> },
    Ball { center: Vec<f64>, radius: f64 },
    Unconstrained,
}

impl ConstraintSet {
    /// Symmetric box `[-half_width, half_width]^dim`.
    pub fn symmetric_box(dim: usize, half_width: f64) -> Self {
        ConstraintSet::Box { lower: vec![-half_width; dim], upper: vec![half_width; dim] }
    }

    /// Checks well-formedness for a block of dimension `dim`.
    pub fn check(&self, dim: usize) -> Result<(), String> {
        match self {
            ConstraintSet::Box { lower, upper } => {
                if lower.len() != dim || upper.len() != dim {
                    return Err(format!(
                        "box bounds have lengths {}/{} but block dimension is {dim}",
                        lower.len(),
                        upper.len()
                    ));
                }
                for (k, (l, u)) in lower.iter().zip(upper).enumerate() {
                    if !l.is_finite() || !u.is_finite() {
                        return Err(format!("box bound {k} is not finite"));
                    }
                    if l > u {
                        return Err(format!("box lower bound {l} exceeds upper bound {u} at {k}"));
                    }
                }
                Ok(())
            }
            ConstraintSet::Ball { center, radius } => {
                if center.len() != dim {
                    return Err(format!("ball center has length {} but block dimension is {dim}", center.len()));
                }
                if !center.iter().all(|c| c.is_finite()) {
                    return Err("ball center is not finite".into());
                }
                if !(radius.is_finite() && *radius > 0.0) {
                    return Err(format!("ball radius {radius} must be positive and finite"));
                }
                Ok(())
            }
            ConstraintSet::Unconstrained => Ok(()),
        }
    }

    pub fn is_bounded(&self) -> bool {
        !matches!(self, ConstraintSet::Unconstrained)
    }

    /// Euclidean projection, in place.
    pub fn project_in_place(&self, v: &mut [f64]) {
        match self {
            ConstraintSet::Box { lower, upper } => {
                for ((x, l), u) in v.iter_mut().zip(lower).zip(upper) {
                    *x = x.clamp(*l, *u);
                }
            }
            ConstraintSet::Ball { center, radius } => {
                let d: Vec<f64> = v.iter().zip(center).map(|(x, c)| x - c).collect();
                let dist = norm2(&d);
                if dist > *radius {
                    let s = radius / dist;
                    for ((x, c), dk) in v.iter_mut().zip(center).zip(&d) {
                        *x = c + s * dk;
                    }
                }
            }
            ConstraintSet::Unconstrained => {}
        }
    }

    pub fn project(&self, v: &[f64]) -> Vec<f64> {
        let mut out = v.to_vec();
        self.project_in_place(&mut out);
        out
    }

    pub fn contains(&self, v: &[f64], tol: f64) -> bool {
        match self {
            ConstraintSet::Box { lower, upper } => {
                v.iter().zip(lower).zip(upper).all(|((x, l), u)| *x >= l - tol && *x <= u + tol)
            }
            ConstraintSet::Ball { center, radius } => {
                let d: Vec<f64> = v.iter().zip(center).map(|(x, c)| x - c).collect();
                norm2(&d) <= radius + tol
            }
            ConstraintSet::Unconstrained => true,
        }
    }

    /// `max_{x ∈ X_i} ‖x‖₂`, or `None` for an unbounded set.
    pub fn max_norm(&self) -> Option<f64> {
        match self {
            ConstraintSet::Box { lower, upper } => {
                let corner: Vec<f64> = lower.iter().zip(upper).map(|(l, u)| l.abs().max(u.abs())).collect();
                Some(norm2(&corner))
            }
            ConstraintSet::Ball { center, radius } => Some(norm2(center) + radius),
            ConstraintSet::Unconstrained => None,
        }
    }
}

/// Euclidean projection of `v` onto `set`.
pub fn project_block(set: &ConstraintSet, v: &[f64]) -> Vec<f64> {
    set.project(v)
}
