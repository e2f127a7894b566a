//! Command-line front end: data ingestion, model fitting, residual-life
//! prediction, simulation studies and chain diagnostics.

pub mod commands;
pub mod error;
pub mod io;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

pub use error::{CliError, Result};

#[derive(Debug, Parser)]
#[command(
    name = "dpm-rul",
    version,
    about = "Degradation modelling and residual-life prediction"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    /// Dirichlet-process mixture for the slopes
    Sp,
    /// Single normal for the slopes
    P,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    /// Residual life conditioned to be positive
    M1,
    /// Unconstrained residual life
    M2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FitModeArg {
    /// Refit with each unit as the new unit
    PerUnit,
    /// Fit once on all units
    Single,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a model and write posterior draws, summaries and diagnostics
    Fit(FitArgs),
    /// Predict residual life from posterior draws
    Predict(PredictArgs),
    /// Run a synthetic study case end to end
    Simulate(SimulateArgs),
    /// Write trace, autocorrelation and summary files for a draws file
    Diagnose(DiagnoseArgs),
}

#[derive(Debug, clap::Args)]
pub struct FitArgs {
    /// CSV with header unit_id,time,measurement
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, value_enum)]
    pub model: ModelArg,
    /// Prior scenario (1-5 for sp, 1-3 for p)
    #[arg(long)]
    pub prior: u8,
    #[arg(long)]
    pub threshold: f64,
    #[arg(long, default_value_t = 50_000)]
    pub iters: usize,
    #[arg(long, default_value_t = 5_000)]
    pub burnin: usize,
    #[arg(long, default_value_t = 50)]
    pub thin: usize,
    /// Metropolis-Hastings steps per sweep for half-Cauchy scales
    #[arg(long, default_value_t = 1)]
    pub mh_steps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, clap::Args)]
pub struct PredictArgs {
    /// Draws CSV written by `fit`
    #[arg(long)]
    pub draws: PathBuf,
    /// Unit ids to predict (repeatable); all units when omitted
    #[arg(long = "unit")]
    pub units: Vec<String>,
    /// Last observation time, or `auto` for the last reading below the
    /// threshold (needs --data)
    #[arg(long, default_value = "auto")]
    pub tk: String,
    #[arg(long)]
    pub threshold: f64,
    #[arg(long, value_enum, default_value_t = MethodArg::M1)]
    pub method: MethodArg,
    /// Data CSV, used for `--tk auto` and to skip units already past the
    /// threshold
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Known residual life, reported as prediction error
    #[arg(long)]
    pub true_rul: Option<f64>,
    /// Known `alpha,beta,sigma_eps2`, reported as KS distance
    #[arg(long, value_delimiter = ',', num_args = 3)]
    pub true_params: Option<Vec<f64>>,
    #[arg(long, default_value_t = 0.95)]
    pub mass: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, clap::Args)]
pub struct SimulateArgs {
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=5))]
    pub case: u8,
    #[arg(long, default_value_t = 10)]
    pub n: usize,
    /// Grid points on [0, 1]
    #[arg(long, default_value_t = 31)]
    pub m: usize,
    /// Prior scenario for both models
    #[arg(long, default_value_t = 2)]
    pub prior: u8,
    /// Prior scenario for the parametric model, when it differs
    #[arg(long)]
    pub p_prior: Option<u8>,
    #[arg(long, default_value_t = 50_000)]
    pub iters: usize,
    #[arg(long, default_value_t = 5_000)]
    pub burnin: usize,
    #[arg(long, default_value_t = 50)]
    pub thin: usize,
    #[arg(long, value_enum, default_value_t = FitModeArg::PerUnit)]
    pub fit_mode: FitModeArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, clap::Args)]
pub struct DiagnoseArgs {
    #[arg(long)]
    pub draws: PathBuf,
    #[arg(long, default_value_t = 50)]
    pub max_lag: usize,
    #[arg(long)]
    pub out: PathBuf,
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match commands::execute(&cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
