mod analyze;
mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use abqp::generator::ConstraintKind;
use abqp::sim::DelayDistribution;

#[derive(Debug, Parser)]
#[command(name = "abqp", version, about = "Asynchronous block-coordinate QP toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a random block diagonally dominant QP with a target contraction constant.
    Generate(GenerateArgs),
    /// Report stepsizes, contraction factors and regularizations for a QP.
    Analyze(AnalyzeArgs),
    /// Run the asynchronous projected gradient simulator on a QP.
    Simulate(SimulateArgs),
    /// Tabulate the implied relative cost error against the reduction in contraction constant.
    #[command(name = "sweep-fig1")]
    SweepFig1(SweepArgs),
    /// Run one unregularized and several regularized simulations on a shared schedule.
    #[command(name = "compare-fig2")]
    CompareFig2(CompareArgs),
}

#[derive(Debug, Args)]
struct OutputArgs {
    /// Write the JSON report to this file.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Print the JSON report instead of the table.
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct GenerateArgs {
    /// JSON generator config; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    blocks: Option<usize>,
    /// Size of every block.
    #[arg(long)]
    block_size: Option<usize>,
    #[arg(long)]
    q_target: Option<f64>,
    #[arg(long)]
    eig_min: Option<f64>,
    #[arg(long)]
    eig_max: Option<f64>,
    /// `unconstrained`, `box:HALF_WIDTH` or `containing:MARGIN`.
    #[arg(long, value_parser = config::parse_constraints)]
    constraints: Option<ConstraintKind>,
    #[arg(long, env = "ABQP_SEED")]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    qp: PathBuf,
    /// Target network contraction constant.
    #[arg(long)]
    q_star: Option<f64>,
    /// Relative cost error tolerance.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Relative solution error tolerance.
    #[arg(long)]
    eta: Option<f64>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    qp: PathBuf,
    /// JSON simulation config; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    p_update: Option<f64>,
    #[arg(long)]
    p_transmit: Option<f64>,
    /// `zero`, `fixed:TICKS`, `geometric:P` or `uniform:MAX`.
    #[arg(long, value_parser = config::parse_delay)]
    delay: Option<DelayDistribution>,
    #[arg(long)]
    discard_stale: bool,
    /// Every agent computes and every link transmits on every tick.
    #[arg(long)]
    synchronous: bool,
    #[arg(long)]
    ticks: Option<u64>,
    #[arg(long)]
    record_every: Option<u64>,
    /// Regularize every block to reach this contraction constant.
    #[arg(long, conflicts_with = "alpha")]
    q_star: Option<f64>,
    /// Same regularization on every block.
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, env = "ABQP_SEED")]
    seed: Option<u64>,
    /// Trace CSV.
    #[arg(long)]
    out: PathBuf,
    /// Summary JSON; defaults to the trace path with a `.json` extension.
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    blocks: Option<usize>,
    #[arg(long, env = "ABQP_SEED")]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct CompareArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    blocks: Option<usize>,
    #[arg(long)]
    ticks: Option<u64>,
    #[arg(long)]
    record_every: Option<u64>,
    #[arg(long, env = "ABQP_SEED")]
    seed: Option<u64>,
    #[arg(long)]
    schedule_seed: Option<u64>,
    /// Directory for the combined CSV, per-run traces and summaries.
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Debug)]
enum Failure {
    Input(String),
    Invariant(String),
}

impl From<abqp::Error> for Failure {
    fn from(e: abqp::Error) -> Self {
        Failure::Input(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Input(e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Input(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate(a) => commands::generate(a),
        Command::Analyze(a) => analyze::run(a),
        Command::Simulate(a) => commands::simulate(a),
        Command::SweepFig1(a) => commands::sweep(a),
        Command::CompareFig2(a) => commands::compare(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Invariant(msg)) => {
            eprintln!("invariant violated: {msg}");
            ExitCode::from(3)
        }
    }
}
