use std::fmt;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// One failed modelling assumption found while validating a quadratic program.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    /// The objective matrix is not symmetric; `max_asymmetry` is max |Q_kl - Q_lk|.
    Symmetry { max_asymmetry: f64 },
    /// Block row `block` is not strictly block diagonally dominant.
    Dominance { block: usize, delta: f64 },
    /// Block `block` has a singular diagonal sub-block.
    SingularDiagonalBlock { block: usize },
    /// The constraint set of block `block` is malformed.
    ConstraintSet { block: usize, reason: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Symmetry { max_asymmetry } => {
                write!(f, "symmetry: Q is not symmetric (max asymmetry {max_asymmetry:e})")
            }
            Violation::Dominance { block, delta } => write!(
                f,
                "strict block diagonal dominance: block {block} has gap {delta:e} <= 0"
            ),
            Violation::SingularDiagonalBlock { block } => {
                write!(f, "strict block diagonal dominance: diagonal block {block} is singular")
            }
            Violation::ConstraintSet { block, reason } => {
                write!(f, "constraint set: block {block}: {reason}")
            }
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("matrix is not strictly block diagonally dominant (block {block}, gap {delta:e})")]
    NotDominant { block: usize, delta: f64 },

    #[error("diagonal block {0} is singular")]
    SingularBlock(usize),

    #[error("matrix is singular or factorization broke down at pivot {0}")]
    Singular(usize),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("assumptions violated: {}", join(.0))]
    AssumptionsViolated(Vec<Violation>),

    #[error("{what} did not converge within {iterations} iterations")]
    NoConvergence { what: &'static str, iterations: usize },

    #[error("target unreachable: {0}")]
    Unreachable(String),

    #[error("relative error undefined: the unregularized optimal cost is zero")]
    ExactSolution,

    #[error("constraint set of block {0} is unbounded")]
    Unbounded(usize),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

fn join(v: &[Violation]) -> String {
    v.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; ")
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }
}
