//! `mixnorm`: projection sweeps, multitask lasso solver runs and synthetic
//! data generation. Records go out as JSON lines, traces as CSV.

mod commands;
mod config;
mod records;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};
use mixnorm::norms::Exponent;

#[derive(Parser, Debug)]
#[command(name = "mixnorm", version, about = "Mixed-norm ball projections and multitask lasso solvers")]
struct Cli {
    /// Worker threads for the library's internal parallelism.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Project a matrix (rows are groups) onto l_{1,q} balls over a radius sweep.
    Project(ProjectArgs),
    /// Run a constrained solver on a multitask lasso problem.
    Solve(SolveArgs),
    /// Write a synthetic multitask lasso problem to disk.
    Gen(GenArgs),
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
pub struct ProjectArgs {
    #[arg(long, default_value = "project")]
    pub experiment: String,
    #[arg(long, default_value_t = 1000)]
    pub rows: usize,
    #[arg(long, default_value_t = 100)]
    pub cols: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// MatrixMarket input used instead of a random matrix.
    #[arg(long)]
    pub matrix_file: Option<PathBuf>,
    /// Inner exponents, comma separated; `inf` for infinity.
    #[arg(long, value_delimiter = ',', action = ArgAction::Set, default_value = "inf")]
    pub q: Vec<Exponent>,
    /// Radii as fractions of the input's l_{1,q} norm.
    #[arg(long, value_delimiter = ',', action = ArgAction::Set, default_value = "0.01,0.05,0.1,0.2,0.3,0.4,0.5,0.6")]
    pub ratios: Vec<f64>,
    /// Tolerance on the root residual `|‖x‖_{1,q} − γ|`, relative to max(1, γ).
    #[arg(long, default_value_t = 1e-13)]
    pub residual_tol: f64,
    /// JSON-lines output; stdout when absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SolverKind {
    Spg,
    Sgd,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Variant {
    Bb1,
    Bb2,
    Adaptive,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
pub struct SolveArgs {
    /// Problem manifest written by `gen`; a synthetic problem is built when absent.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[command(flatten)]
    pub synth: SynthArgs,
    #[arg(long, value_enum, default_value = "spg")]
    pub solver: SolverKind,
    /// Constraint radius; defaults to the manifest or planted value.
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Inner exponent of the constraint; defaults to the manifest value.
    #[arg(long)]
    pub q: Option<Exponent>,
    /// Scale each design column to unit norm before solving.
    #[arg(long)]
    pub normalize: bool,

    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub memory: Option<usize>,
    #[arg(long, value_enum)]
    pub bb_variant: Option<Variant>,

    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub eta0: Option<f64>,
    #[arg(long)]
    pub decay_horizon: Option<f64>,
    #[arg(long)]
    pub projection_period: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub max_steps: Option<usize>,
    /// Seed for batch sampling.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Per-iteration CSV trace.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// JSON summary; stdout when absent.
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct SynthArgs {
    /// Rows per task.
    #[arg(long, default_value_t = 100)]
    pub m: usize,
    /// Features.
    #[arg(long, default_value_t = 50)]
    pub d: usize,
    /// Tasks.
    #[arg(long, default_value_t = 10)]
    pub n: usize,
    #[arg(long, default_value_t = 1.0)]
    pub density: f64,
    #[arg(long, default_value_t = 5)]
    pub active_rows: usize,
    /// Label noise; 1% of the signal RMS when absent.
    #[arg(long)]
    pub noise_std: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub data_seed: u64,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
pub struct GenArgs {
    #[command(flatten)]
    pub synth: SynthArgs,
    #[arg(long)]
    pub out: PathBuf,
}

fn run() -> Result<()> {
    let args = config::expand(std::env::args().collect())?;
    let cli = Cli::try_parse_from(args).unwrap_or_else(|e| e.exit());
    rayon::ThreadPoolBuilder::new().num_threads(cli.threads.max(1)).build_global()?;
    match cli.command {
        Command::Project(a) => commands::project(&a),
        Command::Solve(a) => commands::solve(&a),
        Command::Gen(a) => commands::gen(&a),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
