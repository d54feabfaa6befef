use std::fmt::Write;

use serde::Serialize;

use abqp::bounds::{
    absolute_cost_error_bound, absolute_state_error_bound, epsilon_implied_by_regularization,
    regularization_for_relative_cost_error, regularization_for_relative_solution_error, relative_solution_error_bound,
};
use abqp::select::{contraction_qi, optimal_stepsize, stepsize_bound};
use abqp::{BlockRates, QuadraticProgram};

use crate::{config, AnalyzeArgs, Failure};

#[derive(Debug, Serialize)]
pub struct BlockReport {
    pub block: usize,
    pub size: usize,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub off_diagonal_sum: f64,
    pub delta: f64,
    pub gamma_bound: f64,
    pub gamma_opt: f64,
    pub q: f64,
    pub alpha_rate: Option<f64>,
    pub gamma_rate: Option<f64>,
    pub q_rate: Option<f64>,
    pub alpha_epsilon_cap: Option<f64>,
    pub alpha_eta_cap: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct RateReport {
    pub q_star: f64,
    pub q: f64,
    pub implied_epsilon: f64,
    pub relative_solution_error_bound: f64,
    pub absolute_state_error_bound: f64,
    /// Only for bounded constraint sets.
    pub absolute_cost_error_bound: Option<f64>,
    /// Distance between the projected unconstrained minimizers with and without regularization.
    pub projected_distance: f64,
    /// Distance between the constrained minimizers; not covered by the state bound.
    pub constrained_minimizer_distance: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct AnalyzeReport {
    pub num_blocks: usize,
    pub dim: usize,
    pub q: f64,
    pub epsilon: Option<f64>,
    pub eta: Option<f64>,
    pub rate: Option<RateReport>,
    pub blocks: Vec<BlockReport>,
}

pub fn analyze(qp: &QuadraticProgram, q_star: Option<f64>, epsilon: Option<f64>, eta: Option<f64>) -> Result<AnalyzeReport, Failure> {
    let optimal = BlockRates::optimal(qp);
    let mut blocks = Vec::with_capacity(qp.num_blocks());
    for i in 0..qp.num_blocks() {
        let info = qp.local_info(i);
        let delta = qp.deltas()[i];
        let gamma_opt = optimal_stepsize(&info);
        blocks.push(BlockReport {
            block: i,
            size: qp.partition().size(i),
            lambda_min: info.lambda_min,
            lambda_max: info.lambda_max,
            off_diagonal_sum: info.off_diagonal_sum,
            delta,
            gamma_bound: stepsize_bound(&info),
            gamma_opt,
            q: contraction_qi(&info, gamma_opt),
            alpha_rate: None,
            gamma_rate: None,
            q_rate: None,
            alpha_epsilon_cap: epsilon.map(|e| regularization_for_relative_cost_error(e, delta)).transpose()?,
            alpha_eta_cap: eta.map(|e| regularization_for_relative_solution_error(e, delta)).transpose()?,
        });
    }
    let rate = match q_star {
        None => None,
        Some(q_star) => {
            let (rates, reg) = BlockRates::for_target_rate(qp, q_star)?;
            for (b, r) in blocks.iter_mut().zip(&rates.blocks) {
                b.alpha_rate = Some(r.alpha);
                b.gamma_rate = Some(r.gamma);
                b.q_rate = Some(r.q);
            }
            let x = qp.exact_unconstrained_minimizer(None)?;
            let xa = qp.exact_unconstrained_minimizer(Some(&reg))?;
            let constrained_minimizer_distance = if qp.is_unconstrained() {
                None
            } else {
                Some(qp.centralized_minimizer(None)?.block_max_distance(&qp.centralized_minimizer(Some(&reg))?))
            };
            Some(RateReport {
                q_star,
                q: rates.q,
                implied_epsilon: epsilon_implied_by_regularization(qp, &reg)?,
                relative_solution_error_bound: relative_solution_error_bound(qp, &reg)?,
                absolute_state_error_bound: absolute_state_error_bound(qp, &reg)?,
                absolute_cost_error_bound: if qp.is_bounded() { Some(absolute_cost_error_bound(qp, &reg)?) } else { None },
                projected_distance: qp.project(&x).block_max_distance(&qp.project(&xa)),
                constrained_minimizer_distance,
            })
        }
    };
    Ok(AnalyzeReport { num_blocks: qp.num_blocks(), dim: qp.dim(), q: optimal.q, epsilon, eta, rate, blocks })
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(String::new, |v| format!("{v:.6}"))
}

pub fn table(report: &AnalyzeReport) -> String {
    let mut header = vec!["block", "size", "delta", "gamma_bound", "gamma_opt", "q_i"];
    if report.rate.is_some() {
        header.extend(["alpha_rate", "gamma_rate", "q_rate"]);
    }
    if report.epsilon.is_some() {
        header.push("alpha_eps_cap");
    }
    if report.eta.is_some() {
        header.push("alpha_eta_cap");
    }
    let mut rows: Vec<Vec<String>> = vec![header.iter().map(|s| s.to_string()).collect()];
    for b in &report.blocks {
        let mut row = vec![b.block.to_string(), b.size.to_string()];
        row.extend([b.delta, b.gamma_bound, b.gamma_opt, b.q].map(|v| format!("{v:.6}")));
        if report.rate.is_some() {
            row.extend([b.alpha_rate, b.gamma_rate, b.q_rate].map(cell));
        }
        if report.epsilon.is_some() {
            row.push(cell(b.alpha_epsilon_cap));
        }
        if report.eta.is_some() {
            row.push(cell(b.alpha_eta_cap));
        }
        rows.push(row);
    }
    let mut out = render(&rows);
    let _ = writeln!(out, "\nblocks {}  dim {}  q {:.6}", report.num_blocks, report.dim, report.q);
    if let Some(r) = &report.rate {
        let _ = writeln!(out, "target q* {:.6}  achieved q {:.6}  implied epsilon {:.6}", r.q_star, r.q, r.implied_epsilon);
        let _ = writeln!(
            out,
            "relative solution error bound {:.6}  absolute state error bound {:.6}",
            r.relative_solution_error_bound, r.absolute_state_error_bound
        );
        if let Some(c) = r.absolute_cost_error_bound {
            let _ = writeln!(out, "absolute cost error bound {c:.6}");
        }
        let _ = writeln!(out, "projected minimizer distance {:.6e}", r.projected_distance);
        if let Some(d) = r.constrained_minimizer_distance {
            let _ = writeln!(out, "constrained minimizer distance {d:.6e} (diagnostic, not covered by the state bound)");
        }
    }
    out
}

pub fn render(rows: &[Vec<String>]) -> String {
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..cols).map(|c| rows.iter().filter_map(|r| r.get(c)).map(String::len).max().unwrap_or(0)).collect();
    let mut out = String::new();
    for row in rows {
        let line: Vec<String> = row.iter().zip(&widths).map(|(s, w)| format!("{s:>w$}")).collect();
        let _ = writeln!(out, "{}", line.join("  "));
    }
    out
}

pub fn run(args: AnalyzeArgs) -> Result<(), Failure> {
    let qp = config::read_qp(&args.qp)?;
    let report = analyze(&qp, args.q_star, args.epsilon, args.eta)?;
    config::emit(&report, &table(&report), &args.output)
}
