//! The quadratic program `f(x) = ½ xᵀQx + rᵀx` over `X = X_1 × … × X_N`,
//! its optional block-scalar regularization, and reference solutions.

mod constraint;
mod json;

pub use constraint::{project_block, ConstraintSet};
pub use json::QpDocument;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Violation};
use crate::linalg::{
    block_distance, dot, symmetric_extreme_eigs, BlockMatrix, BlockPartition, BlockVector, Lu, Matrix,
    NormTable, SYMMETRY_TOL,
};

/// Block-scalar regularization `A = diag(α_1 I_{n_1}, …, α_N I_{n_N})`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Regularization {
    alphas: Vec<f64>,
}

impl Regularization {
    pub fn new(alphas: Vec<f64>) -> Result<Self> {
        if let Some(a) = alphas.iter().find(|a| !(a.is_finite() && **a >= 0.0)) {
            return Err(Error::param("alpha", format!("{a} must be finite and nonnegative")));
        }
        Ok(Regularization { alphas })
    }

    pub fn zero(num_blocks: usize) -> Self {
        Regularization { alphas: vec![0.0; num_blocks] }
    }

    pub fn uniform(num_blocks: usize, alpha: f64) -> Result<Self> {
        Self::new(vec![alpha; num_blocks])
    }

    pub fn alpha(&self, i: usize) -> f64 {
        self.alphas[i]
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn num_blocks(&self) -> usize {
        self.alphas.len()
    }

    pub fn is_zero(&self) -> bool {
        self.alphas.iter().all(|&a| a == 0.0)
    }

    /// Expanded diagonal of `A` under `partition`.
    pub fn diagonal(&self, partition: &BlockPartition) -> Vec<f64> {
        (0..partition.num_blocks()).flat_map(|i| std::iter::repeat_n(self.alphas[i], partition.size(i))).collect()
    }
}

impl TryFrom<Vec<f64>> for Regularization {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Regularization::new(v)
    }
}

impl From<Regularization> for Vec<f64> {
    fn from(r: Regularization) -> Vec<f64> {
        r.alphas
    }
}

/// What agent `i` knows about its own block row `Q^[i]`: the spectrum ends of
/// the diagonal block and the spectral norms of its row of sub-blocks.
///
/// Every independent selection rule consumes only this.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalBlockInfo {
    pub lambda_min: f64,
    pub lambda_max: f64,
    /// `Σ_{j≠i} ‖Q^[i]_j‖₂`
    pub off_diagonal_sum: f64,
    /// `Σ_j ‖Q^[i]_j‖₂`
    pub row_norm_sum: f64,
}

impl LocalBlockInfo {
    /// `δ_i(Q)`; the diagonal block is symmetric positive definite here.
    pub fn delta(&self) -> f64 {
        self.lambda_min - self.off_diagonal_sum
    }

    /// The same block row after adding `α I` to the diagonal block.
    pub fn regularized(&self, alpha: f64) -> LocalBlockInfo {
        LocalBlockInfo {
            lambda_min: self.lambda_min + alpha,
            lambda_max: self.lambda_max + alpha,
            off_diagonal_sum: self.off_diagonal_sum,
            row_norm_sum: self.row_norm_sum + alpha,
        }
    }
}

/// Result of checking the modelling assumptions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub max_asymmetry: f64,
    /// `δ_i(Q)` per block.
    pub deltas: Vec<f64>,
    pub bounded: bool,
}

/// Checks symmetry, strict block diagonal dominance and constraint
/// well-formedness, reporting every failure found.
pub fn validate(q: &BlockMatrix, r: &BlockVector, constraints: &[ConstraintSet]) -> Result<Diagnostics> {
    if r.partition() != q.partition() {
        return Err(Error::DimensionMismatch { expected: q.dim(), actual: r.as_slice().len() });
    }
    if constraints.len() != q.num_blocks() {
        return Err(Error::DimensionMismatch { expected: q.num_blocks(), actual: constraints.len() });
    }
    if !q.matrix().all_finite() || !r.as_slice().iter().all(|v| v.is_finite()) {
        return Err(Error::param("qp", "Q and r must be finite"));
    }
    let mut violations = Vec::new();
    for (i, c) in constraints.iter().enumerate() {
        if let Err(reason) = c.check(q.partition().size(i)) {
            violations.push(Violation::ConstraintSet { block: i, reason });
        }
    }
    let max_asymmetry = q.matrix().max_asymmetry();
    let symmetric = max_asymmetry <= SYMMETRY_TOL * q.matrix().max_abs().max(1.0);
    if !symmetric {
        violations.push(Violation::Symmetry { max_asymmetry });
    }
    let mut deltas = Vec::with_capacity(q.num_blocks());
    let table = q.norm_table()?;
    for i in 0..q.num_blocks() {
        match q.diagonal_inverse_norm_reciprocal(i) {
            Ok(recip) => {
                let d = recip - table.off_diagonal_sum(i);
                if d <= 0.0 {
                    violations.push(Violation::Dominance { block: i, delta: d });
                }
                deltas.push(d);
            }
            Err(_) => {
                violations.push(Violation::SingularDiagonalBlock { block: i });
                deltas.push(f64::NAN);
            }
        }
    }
    if !violations.is_empty() {
        return Err(Error::AssumptionsViolated(violations));
    }
    Ok(Diagnostics { max_asymmetry, deltas, bounded: constraints.iter().all(ConstraintSet::is_bounded) })
}

/// Validated quadratic program with its per-block analysis cached.
#[derive(Debug, Clone)]
pub struct QuadraticProgram {
    q: BlockMatrix,
    r: BlockVector,
    constraints: Vec<ConstraintSet>,
    norms: NormTable,
    spectra: Vec<(f64, f64)>,
    diagnostics: Diagnostics,
}

impl QuadraticProgram {
    pub fn new(q: BlockMatrix, r: BlockVector, constraints: Vec<ConstraintSet>) -> Result<Self> {
        let diagnostics = validate(&q, &r, &constraints)?;
        let norms = q.norm_table()?;
        let spectra = (0..q.num_blocks()).map(|i| symmetric_extreme_eigs(&q.block(i, i))).collect::<Result<_>>()?;
        Ok(QuadraticProgram { q, r, constraints, norms, spectra, diagnostics })
    }

    /// Convenience constructor with every block unconstrained.
    pub fn unconstrained(q: BlockMatrix, r: BlockVector) -> Result<Self> {
        let n = q.num_blocks();
        Self::new(q, r, vec![ConstraintSet::Unconstrained; n])
    }

    pub fn q(&self) -> &BlockMatrix {
        &self.q
    }

    pub fn r(&self) -> &BlockVector {
        &self.r
    }

    pub fn constraints(&self) -> &[ConstraintSet] {
        &self.constraints
    }

    pub fn constraint(&self, i: usize) -> &ConstraintSet {
        &self.constraints[i]
    }

    pub fn partition(&self) -> &BlockPartition {
        self.q.partition()
    }

    pub fn num_blocks(&self) -> usize {
        self.q.num_blocks()
    }

    pub fn dim(&self) -> usize {
        self.q.dim()
    }

    pub fn norm_table(&self) -> &NormTable {
        &self.norms
    }

    pub fn diagnostics(&self) -> &Diagnostics {
        &self.diagnostics
    }

    pub fn deltas(&self) -> &[f64] {
        &self.diagnostics.deltas
    }

    /// `(λ_min, λ_max)` of the diagonal block `Q^[i]_i`.
    pub fn block_spectrum(&self, i: usize) -> (f64, f64) {
        self.spectra[i]
    }

    pub fn is_unconstrained(&self) -> bool {
        self.constraints.iter().all(|c| !c.is_bounded())
    }

    pub fn is_bounded(&self) -> bool {
        self.diagnostics.bounded
    }

    pub fn local_info(&self, i: usize) -> LocalBlockInfo {
        let (lambda_min, lambda_max) = self.spectra[i];
        LocalBlockInfo {
            lambda_min,
            lambda_max,
            off_diagonal_sum: self.norms.off_diagonal_sum(i),
            row_norm_sum: self.norms.row_sum(i),
        }
    }

    fn check_vector(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), actual: x.len() });
        }
        Ok(())
    }

    fn check_reg(&self, reg: Option<&Regularization>) -> Result<()> {
        match reg {
            Some(a) if a.num_blocks() != self.num_blocks() => {
                Err(Error::DimensionMismatch { expected: self.num_blocks(), actual: a.num_blocks() })
            }
            _ => Ok(()),
        }
    }

    /// `½ xᵀ(Q + A)x + rᵀx`, with `A = 0` when `reg` is `None`.
    pub fn objective(&self, x: &[f64], reg: Option<&Regularization>) -> Result<f64> {
        self.check_vector(x)?;
        self.check_reg(reg)?;
        let qx = self.q.matrix().matvec(x);
        let mut quad = dot(x, &qx);
        if let Some(a) = reg {
            let p = self.partition();
            quad += (0..self.num_blocks()).map(|i| a.alpha(i) * dot(&x[p.range(i)], &x[p.range(i)])).sum::<f64>();
        }
        Ok(0.5 * quad + dot(self.r.as_slice(), x))
    }

    /// `Q^[i]x + r^[i] + α_i x^[i]`.
    pub fn gradient_block(&self, x: &[f64], i: usize, reg: Option<&Regularization>) -> Result<Vec<f64>> {
        self.check_vector(x)?;
        self.check_reg(reg)?;
        Ok(self.gradient_block_unchecked(x, i, reg.map_or(0.0, |a| a.alpha(i))))
    }

    pub(crate) fn gradient_block_unchecked(&self, x: &[f64], i: usize, alpha: f64) -> Vec<f64> {
        let range = self.partition().range(i);
        let mut g = self.q.block_row_apply(i, x);
        for ((gk, rk), xk) in g.iter_mut().zip(self.r.block(i)).zip(&x[range]) {
            *gk += rk + alpha * xk;
        }
        g
    }

    /// Blockwise projection onto `X`.
    pub fn project(&self, x: &BlockVector) -> BlockVector {
        let mut out = x.clone();
        for (i, c) in self.constraints.iter().enumerate() {
            c.project_in_place(out.block_mut(i));
        }
        out
    }

    pub fn contains(&self, x: &BlockVector, tol: f64) -> bool {
        self.constraints.iter().enumerate().all(|(i, c)| c.contains(x.block(i), tol))
    }

    fn regularized_matrix(&self, reg: Option<&Regularization>) -> Matrix {
        let mut p = self.q.matrix().clone();
        if let Some(a) = reg {
            p.add_diagonal(&a.diagonal(self.partition()));
        }
        p
    }

    /// Solves `(Q + A)x = −r` directly, ignoring the constraint sets.
    pub fn exact_unconstrained_minimizer(&self, reg: Option<&Regularization>) -> Result<BlockVector> {
        self.check_reg(reg)?;
        let p = self.regularized_matrix(reg);
        let minus_r: Vec<f64> = self.r.as_slice().iter().map(|v| -v).collect();
        let lu = Lu::factor(&p)?;
        let mut x = lu.solve(&minus_r);
        // one step of iterative refinement
        let res: Vec<f64> = p.matvec(&x).iter().zip(&minus_r).map(|(a, b)| b - a).collect();
        let dx = lu.solve(&res);
        x.iter_mut().zip(&dx).for_each(|(xk, d)| *xk += d);
        let x = BlockVector::new(x, self.partition().clone())?;
        let residual: Vec<f64> = p.matvec(x.as_slice()).iter().zip(self.r.as_slice()).map(|(a, b)| a + b).collect();
        let rnorm = crate::linalg::block_max_norm(&residual, self.partition());
        if !(rnorm <= 1e-10 * (1.0 + self.r.block_max_norm())) {
            return Err(Error::Singular(0));
        }
        Ok(x)
    }

    /// Constrained minimizer of `f` (or `f_A`) over `X`, by synchronous
    /// projected gradient with per-block optimal stepsizes.
    pub fn centralized_minimizer(&self, reg: Option<&Regularization>) -> Result<BlockVector> {
        self.centralized_minimizer_with(reg, CENTRALIZED_TOL, CENTRALIZED_MAX_ITERS)
    }

    pub fn centralized_minimizer_with(
        &self,
        reg: Option<&Regularization>,
        tol: f64,
        max_iters: usize,
    ) -> Result<BlockVector> {
        self.check_reg(reg)?;
        let n_blocks = self.num_blocks();
        let alphas: Vec<f64> = (0..n_blocks).map(|i| reg.map_or(0.0, |a| a.alpha(i))).collect();
        let infos: Vec<LocalBlockInfo> =
            (0..n_blocks).map(|i| self.local_info(i).regularized(alphas[i])).collect();
        let gammas: Vec<f64> = infos.iter().map(|b| 2.0 / (b.lambda_max + b.lambda_min)).collect();
        let q = infos
            .iter()
            .zip(&gammas)
            .map(|(b, g)| crate::select::contraction_qi(b, *g))
            .fold(0.0, f64::max);
        // a-posteriori error is at most step * q / (1 - q)
        let amplify = if q < 1.0 { (q / (1.0 - q)).max(1.0) } else { f64::INFINITY };
        let mut x = self.project(&BlockVector::zeros(self.partition()));
        let mut next = x.clone();
        for _ in 0..max_iters {
            let mut step = 0.0f64;
            for i in 0..n_blocks {
                let g = self.gradient_block_unchecked(x.as_slice(), i, alphas[i]);
                let xi = x.block(i);
                let out = next.block_mut(i);
                for ((o, xk), gk) in out.iter_mut().zip(xi).zip(&g) {
                    *o = xk - gammas[i] * gk;
                }
                self.constraints[i].project_in_place(out);
                step = step.max(block_distance(out, x.block(i)));
            }
            std::mem::swap(&mut x, &mut next);
            if step == 0.0 || step * amplify <= tol * (1.0 + x.block_max_norm()) {
                return Ok(x);
            }
        }
        Err(Error::NoConvergence { what: "centralized projected gradient", iterations: max_iters })
    }
}

/// Stopping threshold on the a-posteriori error of the centralized oracle.
pub const CENTRALIZED_TOL: f64 = 1e-13;
pub const CENTRALIZED_MAX_ITERS: usize = 10_000_000;
