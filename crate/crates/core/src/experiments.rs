//! Rate-versus-error sweep and regularized-versus-unregularized comparison
//! at the scale of 100 scalar agents.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bounds::{absolute_state_error_bound, epsilon_implied_by_regularization};
use crate::error::{Error, Result};
use crate::generator::{generate, GeneratorConfig};
use crate::linalg::BlockVector;
use crate::model::{QuadraticProgram, Regularization};
use crate::select::{optimal_contraction, BlockRates};
use crate::sim::{AsynchronyModel, RunTrace, Simulation};

/// Unregularized contraction constants of the seven sweep instances.
pub const Q_INITIALS: [f64; 7] = [0.99, 0.95, 0.85, 0.70, 0.50, 0.30, 0.01];

pub const FIG1_CSV_HEADER: &str = "q_initial,reduction_percent,q_star,epsilon";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub num_blocks: usize,
    pub q_initials: Vec<f64>,
    /// Percent reductions of `q`, each in `[0, 100)`.
    pub reductions: Vec<f64>,
    pub eig_range: (f64, f64),
    pub seed: u64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        let mut reductions: Vec<f64> = (0..100).map(f64::from).collect();
        reductions.push(99.9);
        SweepConfig { num_blocks: 100, q_initials: Q_INITIALS.to_vec(), reductions, eig_range: (1.0, 10.0), seed: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub q_initial: f64,
    pub reduction_percent: f64,
    pub q_star: f64,
    pub epsilon: f64,
}

/// Largest closed-form `q_i` at optimal stepsizes.
pub fn unregularized_q(qp: &QuadraticProgram) -> f64 {
    (0..qp.num_blocks()).map(|i| optimal_contraction(&qp.local_info(i))).fold(0.0, f64::max)
}

/// For each instance and reduction, regularizes every block to reach
/// `q* = q·(1 − reduction/100)` and reports the relative cost error the
/// regularization could incur.
pub fn sweep_rate_error(config: &SweepConfig) -> Result<Vec<SweepPoint>> {
    if let Some(r) = config.reductions.iter().find(|r| !(**r >= 0.0 && **r < 100.0)) {
        return Err(Error::param("reductions", format!("{r} must lie in [0, 100)")));
    }
    let mut points = Vec::with_capacity(config.q_initials.len() * config.reductions.len());
    for (k, &target) in config.q_initials.iter().enumerate() {
        let gen = GeneratorConfig {
            num_blocks: config.num_blocks,
            q_target: target,
            eig_range: config.eig_range,
            seed: config.seed.wrapping_add(k as u64),
            ..Default::default()
        };
        let qp = generate(&gen)?;
        let q0 = unregularized_q(&qp);
        for &reduction in &config.reductions {
            let q_star = q0 * (1.0 - reduction / 100.0);
            let (_, reg) = BlockRates::for_target_rate(&qp, q_star)?;
            let epsilon = epsilon_implied_by_regularization(&qp, &reg)?;
            points.push(SweepPoint { q_initial: target, reduction_percent: reduction, q_star, epsilon });
        }
    }
    Ok(points)
}

pub fn sweep_csv(points: &[SweepPoint]) -> String {
    let mut out = String::from(FIG1_CSV_HEADER);
    out.push('\n');
    for p in points {
        let _ = writeln!(out, "{},{},{},{}", p.q_initial, p.reduction_percent, p.q_star, p.epsilon);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CompareConfig {
    pub num_blocks: usize,
    pub q_initial: f64,
    /// Percent reductions of `q` for the regularized runs.
    pub reductions: Vec<f64>,
    pub p_update: f64,
    pub p_transmit: f64,
    pub ticks: u64,
    pub record_every: u64,
    /// Seed for the instance and the initial state.
    pub seed: u64,
    /// Seed for the schedule, shared by every run.
    pub schedule_seed: u64,
    /// Initial state drawn uniformly from `[-x0_range, x0_range]`.
    pub x0_range: f64,
}

impl Default for CompareConfig {
    fn default() -> Self {
        CompareConfig {
            num_blocks: 100,
            q_initial: 0.85,
            reductions: vec![5.0, 15.0, 45.0],
            p_update: 0.10,
            p_transmit: 0.01,
            ticks: 20_000,
            record_every: 20,
            seed: 0,
            schedule_seed: 0,
            x0_range: 10.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CompareRun {
    pub label: String,
    pub reduction_percent: f64,
    pub regularization: Regularization,
    /// Bound on the distance between the regularized and true minimizers.
    pub state_bound: f64,
    pub trace: RunTrace,
}

#[derive(Debug, Clone)]
pub struct Comparison {
    pub qp: QuadraticProgram,
    pub x_hat: BlockVector,
    pub x0: BlockVector,
    pub runs: Vec<CompareRun>,
}

/// One unregularized run followed by one run per reduction, all from the
/// same initial state and schedule.
pub fn compare_regularizations(config: &CompareConfig) -> Result<Comparison> {
    let qp = generate(&GeneratorConfig { num_blocks: config.num_blocks, q_target: config.q_initial, seed: config.seed, ..Default::default() })?;
    let q0 = unregularized_q(&qp);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(u64::MAX);
    let x0 = BlockVector::new(
        (0..qp.dim()).map(|_| rng.random_range(-config.x0_range..=config.x0_range)).collect(),
        qp.partition().clone(),
    )?;
    let x0 = qp.project(&x0);
    let x_hat = qp.exact_unconstrained_minimizer(None)?;
    let model = AsynchronyModel {
        p_update: config.p_update,
        p_transmit: config.p_transmit,
        seed: config.schedule_seed,
        max_ticks: config.ticks,
        ..Default::default()
    };
    let mut levels = vec![("unregularized".to_string(), 0.0)];
    levels.extend(config.reductions.iter().map(|&r| (format!("reduce_{r}"), r)));
    let mut runs = Vec::with_capacity(levels.len());
    for (label, reduction) in levels {
        let (rates, reg) = if reduction == 0.0 {
            let rates = BlockRates::optimal(&qp);
            let reg = rates.regularization();
            (rates, reg)
        } else {
            BlockRates::for_target_rate(&qp, q0 * (1.0 - reduction / 100.0))?
        };
        let trace = Simulation::new(&qp, model.clone())
            .rates(&rates)
            .initial_state(x0.clone())
            .reference(x_hat.clone())
            .record_every(config.record_every)
            .run()?;
        let state_bound = absolute_state_error_bound(&qp, &reg)?;
        runs.push(CompareRun { label, reduction_percent: reduction, regularization: reg, state_bound, trace });
    }
    Ok(Comparison { qp, x_hat, x0, runs })
}

impl Comparison {
    /// `tick` followed by each run's distance to the unregularized minimizer.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("tick");
        for run in &self.runs {
            out.push(',');
            out.push_str(&run.label);
        }
        out.push('\n');
        let rows = self.runs.first().map_or(0, |r| r.trace.rows.len());
        for k in 0..rows {
            let _ = write!(out, "{}", self.runs[0].trace.rows[k].tick);
            for run in &self.runs {
                let _ = write!(out, ",{}", run.trace.rows[k].reference_error);
            }
            out.push('\n');
        }
        out
    }
}
