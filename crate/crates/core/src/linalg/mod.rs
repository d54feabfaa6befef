//! Block-partitioned dense linear algebra.

mod block;
mod eigen;
mod matrix;

pub use block::{block_distance, block_max_norm, BlockMatrix, BlockPartition, BlockVector, NormTable};
pub use eigen::{
    inverse_norm_reciprocal, spectral_norm, symmetric_eigenvalues, symmetric_extreme_eigs, SYMMETRY_TOL,
};
pub use matrix::{dot, norm2, Lu, Matrix};
