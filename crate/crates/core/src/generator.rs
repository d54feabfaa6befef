//! Random strictly block diagonally dominant QPs with a prescribed
//! contraction constant.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{spectral_norm, symmetric_extreme_eigs, BlockMatrix, BlockPartition, BlockVector, Matrix};
use crate::model::{ConstraintSet, QuadraticProgram};
use crate::select::BlockRates;

/// Diagonal blocks whose dominance margin falls below this are redrawn.
pub const MIN_DELTA: f64 = 1e-8;
/// Largest accepted gap between the achieved and requested `q`.
pub const Q_TOLERANCE: f64 = 1e-3;
const MAX_ATTEMPTS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ConstraintKind {
    Unconstrained,
    /// `[-half_width, half_width]` in every coordinate.
    Box { half_width: f64 },
    /// A box around the unconstrained minimizer, `margin` wide on each side.
    ContainingBox { margin: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeneratorConfig {
    pub num_blocks: usize,
    /// Per-block sizes; `None` means every block is scalar.
    pub block_sizes: Option<Vec<usize>>,
    pub q_target: f64,
    pub eig_range: (f64, f64),
    pub seed: u64,
    pub constraints: ConstraintKind,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            num_blocks: 100,
            block_sizes: None,
            q_target: 0.85,
            eig_range: (1.0, 10.0),
            seed: 0,
            constraints: ConstraintKind::Unconstrained,
        }
    }
}

impl GeneratorConfig {
    pub fn new(num_blocks: usize, q_target: f64, seed: u64) -> Self {
        GeneratorConfig { num_blocks, q_target, seed, ..Default::default() }
    }

    pub fn partition(&self) -> Result<BlockPartition> {
        match &self.block_sizes {
            Some(sizes) if sizes.len() != self.num_blocks => {
                Err(Error::DimensionMismatch { expected: self.num_blocks, actual: sizes.len() })
            }
            Some(sizes) => BlockPartition::new(sizes.clone()),
            None => BlockPartition::uniform(self.num_blocks, 1),
        }
    }

    fn check(&self) -> Result<()> {
        if !(self.q_target > 0.0 && self.q_target < 1.0) {
            return Err(Error::param("q_target", format!("{} must lie strictly inside (0, 1)", self.q_target)));
        }
        let (lo, hi) = self.eig_range;
        if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
            return Err(Error::param("eig_range", format!("[{lo}, {hi}] must be a positive finite interval")));
        }
        match self.constraints {
            ConstraintKind::Box { half_width: w } | ConstraintKind::ContainingBox { margin: w } if !(w > 0.0 && w.is_finite()) => {
                Err(Error::param("constraints", format!("box width {w} must be positive and finite")))
            }
            _ => Ok(()),
        }
    }
}

/// Builds a random instance whose unregularized network contraction constant
/// at optimal stepsizes equals `config.q_target`.
pub fn generate(config: &GeneratorConfig) -> Result<QuadraticProgram> {
    config.check()?;
    let partition = config.partition()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    for _ in 0..MAX_ATTEMPTS {
        if let Some(qp) = attempt(config, &partition, &mut rng)? {
            return Ok(qp);
        }
    }
    Err(Error::Unreachable(format!("no instance with every δ_i > {MIN_DELTA} after {MAX_ATTEMPTS} draws")))
}

fn attempt(config: &GeneratorConfig, p: &BlockPartition, rng: &mut ChaCha8Rng) -> Result<Option<QuadraticProgram>> {
    let n_blocks = p.num_blocks();
    let (lo, hi) = config.eig_range;
    let diag: Vec<Matrix> = (0..n_blocks).map(|i| random_spd(p.size(i), lo, hi, rng)).collect();
    let spectra: Vec<(f64, f64)> = diag.iter().map(symmetric_extreme_eigs).collect::<Result<_>>()?;

    let mut coupling = vec![Vec::new(); n_blocks];
    let mut coupling_sum = vec![0.0; n_blocks];
    for i in 0..n_blocks {
        for j in i + 1..n_blocks {
            let g = gaussian(p.size(i), p.size(j), rng);
            let nrm = spectral_norm(&g)?;
            coupling_sum[i] += nrm;
            coupling_sum[j] += nrm;
            coupling[i].push((j, g));
        }
    }

    // q_i = (2 s c_i + λmax − λmin) / (λmax + λmin) is affine in the scale s
    let mut scale = f64::INFINITY;
    for (i, &(l_min, l_max)) in spectra.iter().enumerate() {
        let floor = (l_max - l_min) / (l_max + l_min);
        if floor > config.q_target {
            return Err(Error::Unreachable(format!(
                "block {i} has uncoupled contraction {floor:.6} above target {}; narrow eig_range",
                config.q_target
            )));
        }
        if coupling_sum[i] > 0.0 {
            scale = scale.min((config.q_target * (l_max + l_min) - (l_max - l_min)) / (2.0 * coupling_sum[i]));
        }
    }
    if !scale.is_finite() {
        scale = 0.0;
    }

    let mut q = Matrix::zeros(p.dim(), p.dim());
    for (i, d) in diag.iter().enumerate() {
        place(&mut q, p.offset(i), p.offset(i), d, 1.0, false);
        for (j, g) in &coupling[i] {
            place(&mut q, p.offset(i), p.offset(*j), g, scale, false);
            place(&mut q, p.offset(*j), p.offset(i), g, scale, true);
        }
    }
    let q = BlockMatrix::new(q, p.clone())?;
    if q.deltas()?.iter().any(|&d| d <= MIN_DELTA) {
        return Ok(None);
    }
    let r = BlockVector::new((0..p.dim()).map(|_| rng.sample(StandardNormal)).collect(), p.clone())?;
    let free = QuadraticProgram::unconstrained(q, r)?;
    let achieved = BlockRates::optimal(&free).q;
    if (achieved - config.q_target).abs() > Q_TOLERANCE && n_blocks > 1 {
        return Err(Error::Unreachable(format!("achieved q {achieved} for target {}", config.q_target)));
    }
    let constraints = match config.constraints {
        ConstraintKind::Unconstrained => return Ok(Some(free)),
        ConstraintKind::Box { half_width } => {
            (0..n_blocks).map(|i| ConstraintSet::symmetric_box(p.size(i), half_width)).collect()
        }
        ConstraintKind::ContainingBox { margin } => {
            let x_hat = free.exact_unconstrained_minimizer(None)?;
            (0..n_blocks)
                .map(|i| ConstraintSet::Box {
                    lower: x_hat.block(i).iter().map(|v| v - margin).collect(),
                    upper: x_hat.block(i).iter().map(|v| v + margin).collect(),
                })
                .collect()
        }
    };
    let (q, r) = (free.q().clone(), free.r().clone());
    Ok(Some(QuadraticProgram::new(q, r, constraints)?))
}

fn place(q: &mut Matrix, r0: usize, c0: usize, b: &Matrix, scale: f64, transpose: bool) {
    for a in 0..b.rows() {
        for c in 0..b.cols() {
            let v = scale * b[(a, c)];
            if transpose {
                q[(r0 + c, c0 + a)] = v;
            } else {
                q[(r0 + a, c0 + c)] = v;
            }
        }
    }
}

fn gaussian(rows: usize, cols: usize, rng: &mut impl Rng) -> Matrix {
    let data = (0..rows * cols).map(|_| rng.sample(StandardNormal)).collect();
    Matrix::from_row_major(rows, cols, data).expect("sized buffer")
}

/// Random orthogonal matrix from modified Gram-Schmidt on Gaussian columns.
pub fn random_orthogonal(n: usize, rng: &mut impl Rng) -> Matrix {
    loop {
        let g = gaussian(n, n, rng);
        let mut cols: Vec<Vec<f64>> = (0..n).map(|c| (0..n).map(|r| g[(r, c)]).collect()).collect();
        let mut ok = true;
        for c in 0..n {
            for prev in 0..c {
                let proj: f64 = cols[c].iter().zip(&cols[prev]).map(|(a, b)| a * b).sum();
                let (head, tail) = cols.split_at_mut(c);
                tail[0].iter_mut().zip(&head[prev]).for_each(|(a, b)| *a -= proj * b);
            }
            let nrm = cols[c].iter().map(|v| v * v).sum::<f64>().sqrt();
            if nrm < 1e-8 {
                ok = false;
                break;
            }
            cols[c].iter_mut().for_each(|v| *v /= nrm);
        }
        if ok {
            let mut u = Matrix::zeros(n, n);
            for (c, col) in cols.iter().enumerate() {
                for (r, v) in col.iter().enumerate() {
                    u[(r, c)] = *v;
                }
            }
            return u;
        }
    }
}

fn random_spd(n: usize, lo: f64, hi: f64, rng: &mut impl Rng) -> Matrix {
    let eigs: Vec<f64> = (0..n).map(|_| if lo == hi { lo } else { rng.random_range(lo..=hi) }).collect();
    if n == 1 {
        return Matrix::from_diagonal(&eigs);
    }
    let u = random_orthogonal(n, rng);
    let mut d = Matrix::zeros(n, n);
    for a in 0..n {
        for b in 0..=a {
            let v: f64 = (0..n).map(|k| u[(a, k)] * eigs[k] * u[(b, k)]).sum();
            d[(a, b)] = v;
            d[(b, a)] = v;
        }
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hits_target_at_paper_scale() {
        for &t in &[0.99, 0.95, 0.85, 0.70, 0.50, 0.30, 0.01] {
            let qp = generate(&GeneratorConfig::new(100, t, 3)).unwrap();
            let q = BlockRates::optimal(&qp).q;
            assert!((q - t).abs() <= Q_TOLERANCE, "{t}: {q}");
            assert!(qp.q().is_strictly_block_diag_dominant());
        }
    }

    #[test]
    fn deterministic_in_seed() {
        let c = GeneratorConfig { block_sizes: Some(vec![2, 3, 1]), num_blocks: 3, eig_range: (4.0, 6.0), ..GeneratorConfig::new(3, 0.6, 11) };
        let a = generate(&c).unwrap();
        let b = generate(&c).unwrap();
        assert_eq!(a.q().matrix(), b.q().matrix());
        assert_eq!(a.r(), b.r());
        let other = generate(&GeneratorConfig { seed: 12, ..c }).unwrap();
        assert_ne!(a.q().matrix(), other.q().matrix());
    }

    #[test]
    fn single_block_is_uncoupled() {
        let c = GeneratorConfig { block_sizes: Some(vec![3]), eig_range: (2.0, 3.0), ..GeneratorConfig::new(1, 0.5, 5) };
        let qp = generate(&c).unwrap();
        let (l_min, l_max) = qp.block_spectrum(0);
        let q = BlockRates::optimal(&qp).q;
        assert!((q - (l_max - l_min) / (l_max + l_min)).abs() < 1e-12);
    }

    #[test]
    fn equal_spectra_without_coupling() {
        let c = GeneratorConfig { eig_range: (2.0, 2.0), ..GeneratorConfig::new(1, 0.5, 5) };
        let qp = generate(&c).unwrap();
        assert_eq!(BlockRates::optimal(&qp).q, 0.0);
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(generate(&GeneratorConfig::new(3, 1.5, 0)).is_err());
        assert!(generate(&GeneratorConfig::new(3, 0.0, 0)).is_err());
        let wide = GeneratorConfig { block_sizes: Some(vec![4, 4]), eig_range: (1.0, 100.0), ..GeneratorConfig::new(2, 0.1, 0) };
        assert!(matches!(generate(&wide), Err(Error::Unreachable(_))));
    }

    #[test]
    fn containing_box_keeps_minimizer_inside() {
        let c = GeneratorConfig { constraints: ConstraintKind::ContainingBox { margin: 0.5 }, ..GeneratorConfig::new(6, 0.7, 9) };
        let qp = generate(&c).unwrap();
        let x = qp.exact_unconstrained_minimizer(None).unwrap();
        assert!(qp.contains(&x, 0.0));
        assert!(qp.is_bounded());
    }

    #[test]
    fn orthogonal_factor_is_orthogonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let u = random_orthogonal(5, &mut rng);
        let g = u.transpose().matmul(&u);
        for a in 0..5 {
            for b in 0..5 {
                assert!((g[(a, b)] - if a == b { 1.0 } else { 0.0 }).abs() < 1e-12);
            }
        }
    }
}
