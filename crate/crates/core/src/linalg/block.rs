use serde::{Deserialize, Serialize};

use super::eigen::{inverse_norm_reciprocal, spectral_norm, symmetric_extreme_eigs, SYMMETRY_TOL};
use super::matrix::{norm2, Matrix};
use crate::error::{Error, Result};

/// Block sizes `n_1..n_N` splitting an `n`-vector (and `n × n` matrices) into agent blocks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct BlockPartition {
    sizes: Vec<usize>,
    offsets: Vec<usize>,
    n: usize,
}

impl BlockPartition {
    pub fn new(sizes: Vec<usize>) -> Result<Self> {
        if sizes.is_empty() {
            return Err(Error::InvalidPartition("at least one block is required".into()));
        }
        if let Some(k) = sizes.iter().position(|&s| s == 0) {
            return Err(Error::InvalidPartition(format!("block {k} has size zero")));
        }
        let mut offsets = Vec::with_capacity(sizes.len());
        let mut n = 0;
        for &s in &sizes {
            offsets.push(n);
            n += s;
        }
        Ok(BlockPartition { sizes, offsets, n })
    }

    /// `count` blocks of equal size `size`.
    pub fn uniform(count: usize, size: usize) -> Result<Self> {
        Self::new(vec![size; count])
    }

    pub fn num_blocks(&self) -> usize {
        self.sizes.len()
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn size(&self, i: usize) -> usize {
        self.sizes[i]
    }

    pub fn offset(&self, i: usize) -> usize {
        self.offsets[i]
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn range(&self, i: usize) -> std::ops::Range<usize> {
        self.offsets[i]..self.offsets[i] + self.sizes[i]
    }
}

impl TryFrom<Vec<usize>> for BlockPartition {
    type Error = Error;

    fn try_from(sizes: Vec<usize>) -> Result<Self> {
        BlockPartition::new(sizes)
    }
}

impl From<BlockPartition> for Vec<usize> {
    fn from(p: BlockPartition) -> Vec<usize> {
        p.sizes
    }
}

/// A vector partitioned into blocks `x^[1], …, x^[N]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockVector {
    data: Vec<f64>,
    partition: BlockPartition,
}

impl BlockVector {
    pub fn new(data: Vec<f64>, partition: BlockPartition) -> Result<Self> {
        if data.len() != partition.dim() {
            return Err(Error::DimensionMismatch { expected: partition.dim(), actual: data.len() });
        }
        Ok(BlockVector { data, partition })
    }

    pub fn zeros(partition: &BlockPartition) -> Self {
        BlockVector { data: vec![0.0; partition.dim()], partition: partition.clone() }
    }

    pub fn partition(&self) -> &BlockPartition {
        &self.partition
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn block(&self, i: usize) -> &[f64] {
        &self.data[self.partition.range(i)]
    }

    pub fn block_mut(&mut self, i: usize) -> &mut [f64] {
        let r = self.partition.range(i);
        &mut self.data[r]
    }

    /// Largest Euclidean norm of any single block.
    pub fn block_max_norm(&self) -> f64 {
        block_max_norm(&self.data, &self.partition)
    }

    /// `‖self − other‖_{2,p}`.
    pub fn block_max_distance(&self, other: &BlockVector) -> f64 {
        (0..self.partition.num_blocks())
            .map(|i| block_distance(self.block(i), other.block(i)))
            .fold(0.0, f64::max)
    }

    pub fn block_norms(&self) -> Vec<f64> {
        (0..self.partition.num_blocks()).map(|i| norm2(self.block(i))).collect()
    }
}

/// Euclidean distance between two equally sized blocks.
pub fn block_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Block-maximum norm `max_i ‖x^[i]‖₂` of a raw slice under `partition`.
pub fn block_max_norm(x: &[f64], partition: &BlockPartition) -> f64 {
    assert_eq!(x.len(), partition.dim());
    (0..partition.num_blocks()).map(|i| norm2(&x[partition.range(i)])).fold(0.0, f64::max)
}

/// A square matrix partitioned into sub-blocks `B^[i]_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockMatrix {
    data: Matrix,
    partition: BlockPartition,
}

impl BlockMatrix {
    pub fn new(data: Matrix, partition: BlockPartition) -> Result<Self> {
        if !data.is_square() {
            return Err(Error::DimensionMismatch { expected: data.rows(), actual: data.cols() });
        }
        if data.rows() != partition.dim() {
            return Err(Error::DimensionMismatch { expected: partition.dim(), actual: data.rows() });
        }
        Ok(BlockMatrix { data, partition })
    }

    pub fn partition(&self) -> &BlockPartition {
        &self.partition
    }

    pub fn matrix(&self) -> &Matrix {
        &self.data
    }

    pub fn dim(&self) -> usize {
        self.partition.dim()
    }

    pub fn num_blocks(&self) -> usize {
        self.partition.num_blocks()
    }

    /// Sub-block `B^[i]_j` as an owned `n_i × n_j` matrix.
    pub fn block(&self, i: usize, j: usize) -> Matrix {
        let p = &self.partition;
        self.data.submatrix(p.offset(i), p.offset(j), p.size(i), p.size(j))
    }

    /// Row `k` of the full matrix.
    pub fn row(&self, k: usize) -> &[f64] {
        self.data.row(k)
    }

    pub fn matvec(&self, x: &BlockVector) -> BlockVector {
        assert_eq!(x.partition(), &self.partition);
        BlockVector { data: self.data.matvec(x.as_slice()), partition: self.partition.clone() }
    }

    /// `B^[i] x`, the rows of block `i` applied to the full vector.
    pub fn block_row_apply(&self, i: usize, x: &[f64]) -> Vec<f64> {
        self.partition.range(i).map(|k| super::matrix::dot(self.data.row(k), x)).collect()
    }

    /// Table of sub-block spectral norms `‖B^[i]_j‖₂`.
    pub fn norm_table(&self) -> Result<NormTable> {
        let n = self.num_blocks();
        let mut norms = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                norms[i * n + j] = spectral_norm(&self.block(i, j))?;
            }
        }
        Ok(NormTable { n, norms })
    }

    /// `(‖(B^[i]_i)⁻¹‖₂)⁻¹`, taken as `λ_min` directly when the diagonal block
    /// is symmetric positive definite.
    pub fn diagonal_inverse_norm_reciprocal(&self, i: usize) -> Result<f64> {
        let d = self.block(i, i);
        if d.is_symmetric(SYMMETRY_TOL * d.max_abs().max(1.0)) {
            if let Ok((lo, _)) = symmetric_extreme_eigs(&d) {
                if lo > 0.0 {
                    return Ok(lo);
                }
            }
        }
        inverse_norm_reciprocal(&d).map_err(|_| Error::SingularBlock(i))
    }

    /// Dominance gaps `δ_i(B)` for all block rows.
    pub fn deltas(&self) -> Result<Vec<f64>> {
        let table = self.norm_table()?;
        (0..self.num_blocks())
            .map(|i| Ok(self.diagonal_inverse_norm_reciprocal(i)? - table.off_diagonal_sum(i)))
            .collect()
    }

    /// Dominance gap `δ_i(B)` of a single block row.
    pub fn delta(&self, i: usize) -> Result<f64> {
        let off: f64 = (0..self.num_blocks())
            .filter(|&j| j != i)
            .map(|j| spectral_norm(&self.block(i, j)))
            .sum::<Result<f64>>()?;
        Ok(self.diagonal_inverse_norm_reciprocal(i)? - off)
    }

    pub fn is_strictly_block_diag_dominant(&self) -> bool {
        match self.deltas() {
            Ok(d) => d.iter().all(|&v| v > 0.0),
            Err(_) => false,
        }
    }

    /// Upper bound `max_i Σ_j ‖B^[i]_j‖₂` on the induced block-maximum norm.
    pub fn induced_norm_upper_bound(&self) -> Result<f64> {
        Ok(self.norm_table()?.max_row_sum())
    }

    /// `β_p(B)⁻¹ = (min_i δ_i(B))⁻¹`, an upper bound on `‖B⁻¹‖_{2,p}`.
    pub fn inverse_norm_bound(&self) -> Result<f64> {
        let deltas = self.deltas()?;
        let (block, beta) = min_with_index(&deltas);
        if beta <= 0.0 {
            return Err(Error::NotDominant { block, delta: beta });
        }
        Ok(1.0 / beta)
    }

    /// `min_i δ_i(B)`, a lower bound on `λ_min(B)` for symmetric `B`.
    pub fn gershgorin_lambda_min_bound(&self) -> Result<f64> {
        if !self.data.is_symmetric(SYMMETRY_TOL * self.data.max_abs().max(1.0)) {
            return Err(Error::NotSymmetric(self.data.max_asymmetry()));
        }
        Ok(min_with_index(&self.deltas()?).1)
    }
}

fn min_with_index(v: &[f64]) -> (usize, f64) {
    v.iter()
        .copied()
        .enumerate()
        .fold((0, f64::INFINITY), |best, c| if c.1 < best.1 { c } else { best })
}

/// Cached `N × N` table of sub-block spectral norms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormTable {
    n: usize,
    norms: Vec<f64>,
}

impl NormTable {
    pub fn num_blocks(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.norms[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.norms[i * self.n..(i + 1) * self.n]
    }

    pub fn row_sum(&self, i: usize) -> f64 {
        self.row(i).iter().sum()
    }

    /// `Σ_{j≠i} ‖B^[i]_j‖₂`.
    pub fn off_diagonal_sum(&self, i: usize) -> f64 {
        self.row(i).iter().enumerate().filter(|&(j, _)| j != i).map(|(_, v)| v).sum()
    }

    pub fn max_row_sum(&self) -> f64 {
        (0..self.n).map(|i| self.row_sum(i)).fold(0.0, f64::max)
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| self.row(i).to_vec()).collect()
    }
}
