//! `nifrde` command-line tool.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 argument outside
//! the supported range, 3 solver divergence, 4 evaluation point outside a
//! flow interval, 5 a stability check reported a violation.

mod commands;
mod config;
mod output;
mod registry;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub const OUTPUT_DIR_ENV: &str = "NIFRDE_OUTPUT_DIR";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] nifrde::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("{0} check(s) violated")]
    Violated(usize),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        use nifrde::Error as E;
        match self {
            CliError::Config(_) | CliError::Io(_) => 1,
            CliError::Core(E::Range { .. } | E::Pole(_)) => 2,
            CliError::Core(E::NonFinite { .. }) => 3,
            CliError::Core(E::Domain(_)) => 4,
            CliError::Core(_) => 1,
            CliError::Violated(_) => 5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Tsv,
}

#[derive(Debug, Parser)]
#[command(name = "nifrde", version, about = "Impulsive Caputo fractional differential equations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Output file. Without it, output goes to `$NIFRDE_OUTPUT_DIR/<command>.<ext>`
    /// when that variable is set, else to stdout.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// TOML configuration file; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tabulate a Mittag-Leffler function.
    Ml(MlArgs),
    /// Solve a problem and emit the trajectory.
    Solve(SolveArgs),
    /// Evaluate Lyapunov derivatives, or the example8 coefficient curve.
    Lyap(LyapArgs),
    /// Run the comparison and hypothesis checks on a computed trajectory.
    Check(CheckArgs),
    /// Search for a uniform-stability δ by sampling initial data.
    Probe(ProbeArgs),
}

#[derive(Debug, Args)]
pub struct MlArgs {
    /// One-parameter function E_q.
    #[arg(long, conflicts_with_all = ["alpha", "beta"])]
    pub q: Option<f64>,
    #[arg(long, requires = "beta")]
    pub alpha: Option<f64>,
    #[arg(long, requires = "alpha")]
    pub beta: Option<f64>,
    /// Single argument; alternatively give a range.
    #[arg(long, allow_negative_numbers = true, conflicts_with_all = ["z_from", "z_to"])]
    pub z: Option<f64>,
    #[arg(long, allow_negative_numbers = true, requires = "z_to")]
    pub z_from: Option<f64>,
    #[arg(long, allow_negative_numbers = true, requires = "z_from")]
    pub z_to: Option<f64>,
    #[arg(long, default_value_t = 0.5)]
    pub z_step: f64,
}

#[derive(Debug, Args, Default)]
pub struct ProblemArgs {
    /// Built-in problem name.
    #[arg(long)]
    pub builtin: Option<String>,
    #[arg(long)]
    pub q: Option<f64>,
    #[arg(long = "A", allow_negative_numbers = true)]
    pub a: Option<f64>,
    /// Comma-separated impulse gains.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub gains: Option<Vec<f64>>,
    #[arg(long, allow_negative_numbers = true)]
    pub x0: Option<f64>,
    #[arg(long)]
    pub t0: Option<f64>,
    #[arg(long)]
    pub horizon: Option<f64>,
    /// Number of impulses (example8).
    #[arg(long)]
    pub impulses: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    /// Total step budget over the horizon.
    #[arg(long)]
    pub steps: Option<usize>,
}

#[derive(Debug, Args)]
pub struct LyapArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    /// Evaluation times (comma-separated).
    #[arg(long, value_delimiter = ',')]
    pub t: Vec<f64>,
    /// Evaluation states (comma-separated, scalar problems).
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub x: Vec<f64>,
    /// Emit the example8 coefficient f(t) instead.
    #[arg(long)]
    pub figure2: bool,
    #[arg(long, default_value_t = 0.1)]
    pub t_from: f64,
    #[arg(long, default_value_t = 20.0)]
    pub t_to: f64,
    #[arg(long, default_value_t = 0.1)]
    pub t_step: f64,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[arg(long)]
    pub steps: Option<usize>,
    /// Base margin tolerance; the solver error estimate is added to it.
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ProbeArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Initial times (comma-separated); defaults to two per flow for the first two flows.
    #[arg(long = "t0-samples", value_delimiter = ',')]
    pub t0_samples: Option<Vec<f64>>,
    /// δ grid (comma-separated); defaults to ε·{1, 0.5, 0.2, 0.1, 0.05, 0.02, 0.01}.
    #[arg(long, value_delimiter = ',')]
    pub deltas: Option<Vec<f64>>,
    /// Steps per unit time for every sampled trajectory.
    #[arg(long, default_value_t = 200)]
    pub steps_per_unit: usize,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("nifrde: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
