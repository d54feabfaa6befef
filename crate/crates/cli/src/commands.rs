use std::fs;

use serde::Serialize;

use abqp::experiments::{compare_regularizations, sweep_csv, sweep_rate_error, CompareConfig, SweepConfig};
use abqp::generator::{generate as generate_qp, GeneratorConfig};
use abqp::sim::{RunTrace, Simulation};
use abqp::{BlockRates, BlockVector, Regularization};

use crate::analyze::{self, render, AnalyzeReport};
use crate::config::{self, SimulateConfig};
use crate::{CompareArgs, Failure, GenerateArgs, SimulateArgs, SweepArgs};

#[derive(Debug, Serialize)]
struct GenerateReport {
    config: GeneratorConfig,
    analysis: AnalyzeReport,
}

pub fn generate(args: GenerateArgs) -> Result<(), Failure> {
    let mut cfg: GeneratorConfig = config::load(args.config.as_deref())?;
    if let Some(n) = args.blocks {
        cfg.num_blocks = n;
    }
    if let Some(k) = args.block_size {
        cfg.block_sizes = Some(vec![k; cfg.num_blocks]);
    }
    if let Some(q) = args.q_target {
        cfg.q_target = q;
    }
    if let Some(lo) = args.eig_min {
        cfg.eig_range.0 = lo;
    }
    if let Some(hi) = args.eig_max {
        cfg.eig_range.1 = hi;
    }
    if let Some(c) = args.constraints {
        cfg.constraints = c;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    let qp = generate_qp(&cfg)?;
    config::write(&args.out, &(qp.to_json()? + "\n"))?;
    let analysis = analyze::analyze(&qp, None, None, None)?;
    let table = analyze::table(&analysis);
    config::emit(&GenerateReport { config: cfg, analysis }, &table, &args.output)
}

fn envelope_failure(trace: &RunTrace, label: &str) -> Option<String> {
    let s = &trace.summary;
    (trace.metadata.stepsizes_valid && s.envelope_violations > 0).then(|| {
        format!("{label}: {} envelope violations under valid stepsizes, first {:?}", s.envelope_violations, s.first_violation)
    })
}

pub fn simulate(args: SimulateArgs) -> Result<(), Failure> {
    let qp = config::read_qp(&args.qp)?;
    let mut cfg: SimulateConfig = config::load(args.config.as_deref())?;
    let m = &mut cfg.model;
    if args.synchronous {
        m.p_update = 1.0;
        m.p_transmit = 1.0;
        m.delay = Default::default();
    }
    if let Some(p) = args.p_update {
        m.p_update = p;
    }
    if let Some(p) = args.p_transmit {
        m.p_transmit = p;
    }
    if let Some(d) = args.delay {
        m.delay = d;
    }
    if args.discard_stale {
        m.discard_stale = true;
    }
    if let Some(t) = args.ticks {
        m.max_ticks = t;
    }
    if let Some(s) = args.seed {
        m.seed = s;
    }
    if let Some(r) = args.record_every {
        cfg.record_every = r;
    }
    if let Some(q) = args.q_star {
        cfg.q_star = Some(q);
        cfg.alphas = None;
    }
    if let Some(a) = args.alpha {
        cfg.alphas = Some(vec![a; qp.num_blocks()]);
        cfg.q_star = None;
    }

    let mut sim = Simulation::new(&qp, cfg.model.clone()).record_every(cfg.record_every);
    if let Some(q_star) = cfg.q_star {
        let (rates, _) = BlockRates::for_target_rate(&qp, q_star)?;
        sim = sim.rates(&rates);
    } else if let Some(alphas) = cfg.alphas.clone() {
        sim = sim.regularization(Regularization::new(alphas)?);
    }
    if let Some(g) = cfg.gammas.clone() {
        sim = sim.stepsizes(g);
    }
    if let Some(x0) = cfg.x0.clone() {
        sim = sim.initial_state(BlockVector::new(x0, qp.partition().clone())?);
    }
    let trace = sim.run()?;

    config::write(&args.out, &trace.to_csv())?;
    let summary = args.summary.clone().unwrap_or_else(|| config::sidecar_path(&args.out));
    config::write(&summary, &(trace.sidecar_json() + "\n"))?;
    let s = &trace.summary;
    println!(
        "ticks {}  cycles {}  q {:.6}  D_o {:.6e}  final max block error {:.6e}  envelope violations {}",
        s.ticks, s.cycles, trace.metadata.q, trace.metadata.d_o, s.final_max_block_error, s.envelope_violations
    );
    if !trace.metadata.stepsizes_valid {
        eprintln!("warning: stepsizes exceed the contraction bound; the envelope is not guaranteed");
    }
    match envelope_failure(&trace, "simulate") {
        Some(msg) => Err(Failure::Invariant(msg)),
        None => Ok(()),
    }
}

pub fn sweep(args: SweepArgs) -> Result<(), Failure> {
    let mut cfg: SweepConfig = config::load(args.config.as_deref())?;
    if let Some(n) = args.blocks {
        cfg.num_blocks = n;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    let points = sweep_rate_error(&cfg)?;
    config::write(&args.out, &sweep_csv(&points))?;
    println!("{} points written to {}", points.len(), args.out.display());
    Ok(())
}

#[derive(Debug, Serialize)]
struct CompareSummaryRun {
    label: String,
    reduction_percent: f64,
    q: f64,
    state_bound: f64,
    cycles: u64,
    final_reference_error: f64,
    final_state_error: f64,
    envelope_violations: u64,
    alphas: Vec<f64>,
}

#[derive(Debug, Serialize)]
struct CompareSummary {
    config: CompareConfig,
    d_o: f64,
    runs: Vec<CompareSummaryRun>,
}

pub fn compare(args: CompareArgs) -> Result<(), Failure> {
    let mut cfg: CompareConfig = config::load(args.config.as_deref())?;
    if let Some(n) = args.blocks {
        cfg.num_blocks = n;
    }
    if let Some(t) = args.ticks {
        cfg.ticks = t;
    }
    if let Some(r) = args.record_every {
        cfg.record_every = r;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(s) = args.schedule_seed {
        cfg.schedule_seed = s;
    }
    let cmp = compare_regularizations(&cfg)?;
    fs::create_dir_all(&args.out_dir)?;
    config::write(&args.out_dir.join("fig2.csv"), &cmp.to_csv())?;
    let mut runs = Vec::with_capacity(cmp.runs.len());
    let mut failures = Vec::new();
    let mut rows = vec![["run", "q", "state_bound", "cycles", "final_error_to_x_hat", "violations"].map(String::from).to_vec()];
    for run in &cmp.runs {
        let t = &run.trace;
        config::write(&args.out_dir.join(format!("{}.csv", run.label)), &t.to_csv())?;
        config::write(&args.out_dir.join(format!("{}.json", run.label)), &(t.sidecar_json() + "\n"))?;
        failures.extend(envelope_failure(t, &run.label));
        rows.push(vec![
            run.label.clone(),
            format!("{:.6}", t.metadata.q),
            format!("{:.6}", run.state_bound),
            t.summary.cycles.to_string(),
            format!("{:.6e}", t.summary.final_reference_error),
            t.summary.envelope_violations.to_string(),
        ]);
        runs.push(CompareSummaryRun {
            label: run.label.clone(),
            reduction_percent: run.reduction_percent,
            q: t.metadata.q,
            state_bound: run.state_bound,
            cycles: t.summary.cycles,
            final_reference_error: t.summary.final_reference_error,
            final_state_error: t.summary.final_state_error,
            envelope_violations: t.summary.envelope_violations,
            alphas: run.regularization.alphas().to_vec(),
        });
    }
    let d_o = cmp.runs.first().map_or(0.0, |r| r.trace.metadata.d_o);
    let summary = CompareSummary { config: cfg, d_o, runs };
    config::write(&args.out_dir.join("summary.json"), &(serde_json::to_string_pretty(&summary)? + "\n"))?;
    print!("{}", render(&rows));
    if failures.is_empty() {
        Ok(())
    } else {
        Err(Failure::Invariant(failures.join("; ")))
    }
}
