//! `medgtest`: near-similar g-test for mediation, plus the numerical workflows behind it.

mod commands;
mod data;
mod error;
mod manifest;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "medgtest",
    version,
    about = "Near-similar g-test for the no-mediation hypothesis"
)]
struct Cli {
    /// Worker threads for parallel sweeps.
    #[arg(long, global = true, env = "MEDGTEST_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Test for mediation from t-statistics or from a data file.
    Test(TestArgs),
    /// Print g(t) for each argument.
    Gval(GvalArgs),
    /// Print the boundary on the 0.00..2.19 table layout.
    Table(TableArgs),
    /// Null rejection probabilities on μ = (0, μ₀).
    Nrp(NrpArgs),
    /// Rejection probabilities at alternative points.
    Power(PowerArgs),
    /// Construct the exactly similar step boundary.
    Exact(ExactArgs),
    /// Optimize a piecewise linear boundary.
    Optimize(OptimizeArgs),
    /// Point-optimal power envelope.
    Envelope(EnvelopeArgs),
}

#[derive(Args, Serialize)]
pub struct BoundaryArg {
    /// `published`, `lr`, `wald`, `exact` or a boundary JSON file.
    #[arg(long, default_value = "published")]
    pub boundary: String,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
}

#[derive(Args, Serialize)]
pub struct TestArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub t1: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub t2: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub t3: Option<f64>,
    /// CSV file with a header row.
    #[arg(long, conflicts_with_all = ["t1", "t2", "t3"])]
    pub data: Option<PathBuf>,
    #[arg(long, requires = "data")]
    pub y: Option<String>,
    #[arg(long, requires = "data")]
    pub m: Option<String>,
    #[arg(long, requires = "data")]
    pub x: Option<String>,
    /// Comma-separated control columns.
    #[arg(long, requires = "data", value_delimiter = ',')]
    pub controls: Vec<String>,
    /// Residual variance divisor: `ols` (n − k) or `ml` (n).
    #[arg(long, default_value = "ols")]
    pub variance: String,
    #[arg(long, default_value = "published")]
    pub boundary: String,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
pub struct GvalArgs {
    #[arg(required = true)]
    pub t: Vec<f64>,
    #[command(flatten)]
    pub boundary: BoundaryArg,
}

#[derive(Args, Serialize)]
pub struct TableArgs {
    #[command(flatten)]
    pub boundary: BoundaryArg,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
pub struct NrpArgs {
    #[command(flatten)]
    pub boundary: BoundaryArg,
    /// `start:step:stop` or a comma-separated list of μ₀ values.
    #[arg(long, default_value = "0:0.1:7.5")]
    pub grid: String,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    /// Monte Carlo draws per point for a cross-check column (0 disables).
    #[arg(long, default_value_t = 0)]
    pub mc_draws: u64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
pub struct PowerArgs {
    #[command(flatten)]
    pub boundary: BoundaryArg,
    /// Points as `m1,m2;m1,m2;…`.
    #[arg(long, conflicts_with_all = ["mu1", "mu2"])]
    pub points: Option<String>,
    /// Grid for μ₁ (combined with --mu2 as a product grid).
    #[arg(long, requires = "mu2")]
    pub mu1: Option<String>,
    #[arg(long, requires = "mu1")]
    pub mu2: Option<String>,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
pub struct ExactArgs {
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
pub struct OptimizeArgs {
    /// `basic` minimizes the shortfall below α; `optimal` maximizes power within the band.
    #[arg(long, default_value = "basic")]
    pub mode: String,
    #[arg(long, default_value_t = 16)]
    pub j_max: usize,
    #[arg(long, default_value_t = 1e-5)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long, default_value_t = 150)]
    pub max_iterations: usize,
    /// Starting boundary for `optimal`: `published` or a boundary JSON file.
    #[arg(long)]
    pub start: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
pub struct EnvelopeArgs {
    /// Points as `m1,m2;m1,m2;…`.
    #[arg(long)]
    pub points: String,
    #[arg(long, default_value_t = 6.0)]
    pub t_max: f64,
    #[arg(long, default_value_t = 0.05)]
    pub cell: f64,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long, default_value_t = 1e-5)]
    pub epsilon: f64,
    /// Drop the lower bound on null rejection probabilities.
    #[arg(long)]
    pub nonsimilar: bool,
    /// Compare against this boundary's power at each point.
    #[arg(long)]
    pub boundary: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error[usage]: --threads must be positive");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error[usage]: {e}");
            return ExitCode::from(2);
        }
    }
    let result = match &cli.command {
        Command::Test(a) => commands::test(a),
        Command::Gval(a) => commands::gval(a),
        Command::Table(a) => commands::table(a),
        Command::Nrp(a) => commands::nrp(a),
        Command::Power(a) => commands::power(a),
        Command::Exact(a) => commands::exact(a),
        Command::Optimize(a) => commands::optimize(a),
        Command::Envelope(a) => commands::envelope(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.code());
            ExitCode::from(e.exit_code())
        }
    }
}
