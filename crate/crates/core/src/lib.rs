//! Totally asynchronous block-based quadratic programming.
//!
//! Agents each own one block of the decision vector, run projected gradient
//! steps on their block with their own stepsize `γ_i` and regularization
//! `α_i`, and exchange block values over an unreliable, delayed network.
//! This crate provides the block linear algebra, the stepsize and
//! regularization selection rules, error bounds, a random instance
//! generator, a deterministic discrete-event simulator and reference oracles.

pub mod bounds;
pub mod error;
pub mod experiments;
pub mod generator;
pub mod linalg;
pub mod model;
pub mod oracle;
pub mod select;
pub mod sim;

pub use error::{Error, Result, Violation};
pub use linalg::{BlockMatrix, BlockPartition, BlockVector, Matrix};
pub use model::{ConstraintSet, QuadraticProgram, Regularization};
pub use select::{BlockRate, BlockRates};
