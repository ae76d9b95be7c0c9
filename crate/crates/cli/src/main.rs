//! Command-line front end: complete incomplete tensors, inpaint images, run
//! benchmark suites. Every command writes its outputs plus a `manifest.txt`
//! from which `tuckit rerun` reproduces the run bit-exactly.
//!
//! Exit codes: 0 success, 2 usage, 3 file-format error, 4 numerical failure.

mod benchmark;
mod complete;
mod inpaint;
mod manifest;

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "tuckit", version, about = "Tucker decomposition of incomplete tensors with automatic rank determination")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decompose/complete a tensor from a DTF1 file.
    Complete(complete::CompleteArgs),
    /// Inpaint the missing pixels of a PPM image.
    Inpaint(inpaint::InpaintArgs),
    /// Run a suite of synthetic experiments from a TOML spec.
    Benchmark(benchmark::BenchmarkArgs),
    /// Re-run a previous command from its manifest file.
    Rerun {
        /// Path to a manifest.txt written by an earlier run.
        manifest: PathBuf,
    },
}

/// Solver flags shared by `complete` and `inpaint`. Defaults mirror the
/// validated experimental settings.
#[derive(Args, Debug, Clone)]
pub struct SolverFlags {
    /// Data-fit weight.
    #[arg(long)]
    pub lambda1: Option<f64>,
    /// Factor ridge weight.
    #[arg(long, default_value_t = 1.0)]
    pub lambda2: f64,
    /// MFISTA over-relaxation parameter in (0, 2).
    #[arg(long, default_value_t = 0.1)]
    pub delta: f64,
    /// Inner MFISTA iterations per outer step.
    #[arg(long, default_value_t = 2)]
    pub tmax: usize,
    /// Relative sub-tensor-norm pruning threshold.
    #[arg(long, default_value_t = 1e-4)]
    pub prune_tol: f64,
    /// Absolute stop threshold on the core change per outer iteration
    /// (default: scale-aware).
    #[arg(long)]
    pub outer_tol: Option<f64>,
    /// Outer iteration cap.
    #[arg(long, default_value_t = 300)]
    pub max_iters: usize,
    /// Per-mode cap on the initial core dimensions, comma-separated.
    #[arg(long, value_delimiter = ',')]
    pub init_core_dims: Option<Vec<usize>>,
    /// RNG seed for mask generation and trial derivation.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Skip canonical input rescaling.
    #[arg(long, default_value_t = false)]
    pub no_normalize: bool,
}

impl SolverFlags {
    fn to_config(&self, default_lambda1: f64) -> tuckit::SolverConfig {
        tuckit::SolverConfig {
            lambda1: self.lambda1.unwrap_or(default_lambda1),
            lambda2: self.lambda2,
            logsum_epsilon: None,
            delta: self.delta,
            t_max: self.tmax,
            prune_tol: self.prune_tol,
            outer_tol: self.outer_tol,
            max_outer_iters: self.max_iters,
            init_core_dims: self.init_core_dims.clone(),
            rng_seed: self.seed,
            normalize_input: !self.no_normalize,
            ..Default::default()
        }
    }
}

/// Command failures carrying their exit code.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Format(String),
    Numerical(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Format(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Format(m) => write!(f, "format error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl From<tuckit::Error> for CliError {
    fn from(e: tuckit::Error) -> Self {
        use tuckit::Error as E;
        match e {
            E::NumericalFailure(_) | E::EmptyObservations => CliError::Numerical(e.to_string()),
            _ => CliError::Format(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Format(e.to_string())
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Complete(args) => complete::run(&args),
        Command::Inpaint(args) => inpaint::run(&args),
        Command::Benchmark(args) => benchmark::run(&args),
        Command::Rerun { manifest } => {
            let argv = manifest::to_argv(&manifest)?;
            let cli = Cli::try_parse_from(&argv)
                .map_err(|e| CliError::Format(format!("manifest does not parse: {e}")))?;
            if matches!(cli.command, Command::Rerun { .. }) {
                return Err(CliError::Format("manifest recursion".into()));
            }
            dispatch(cli)
        }
    }
}

fn main() -> ExitCode {
    // clap exits with code 2 on usage errors by itself
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("tuckit: {e}");
            ExitCode::from(e.code())
        }
    }
}
