//! `tuckit complete`: decompose a DTF1 tensor, write the model, the
//! reconstruction, and a report.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::Args;

use crate::manifest::{manifest_path, Manifest};
use crate::{CliError, SolverFlags};
use tuckit::datagen::nmse;
use tuckit::io;
use tuckit::DenseTensor;

#[derive(Args, Debug)]
pub struct CompleteArgs {
    /// Input tensor (DTF1).
    #[arg(long)]
    pub input: PathBuf,
    /// Observation mask (DMF1). Without it, missing entries are derived from
    /// the sentinel (default: non-finite entries are missing).
    #[arg(long)]
    pub mask: Option<PathBuf>,
    /// Sentinel value marking missing entries ("nan" or a number).
    #[arg(long)]
    pub sentinel: Option<String>,
    /// Ground-truth tensor (DTF1) for NMSE reporting.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out_dir: PathBuf,
    #[command(flatten)]
    pub solver: SolverFlags,
    /// Pin volatile manifest fields for byte-reproducible reruns.
    #[arg(long, default_value_t = false)]
    pub reproducible: bool,
}

fn parse_sentinel(s: &str) -> Result<f64, CliError> {
    if s.eq_ignore_ascii_case("nan") {
        return Ok(f64::NAN);
    }
    s.parse::<f64>()
        .map_err(|_| CliError::Usage(format!("sentinel {s:?} is neither a number nor \"nan\"")))
}

pub fn run(args: &CompleteArgs) -> Result<(), CliError> {
    // read and validate everything before any output is created
    let y = io::read_tensor(&args.input)?;
    let mask = match (&args.mask, &args.sentinel) {
        (Some(path), None) => {
            let m = io::read_mask(path)?;
            if m.dims() != y.dims() {
                return Err(CliError::Format(format!(
                    "mask dims {:?} do not match tensor dims {:?}",
                    m.dims(),
                    y.dims()
                )));
            }
            m
        }
        (None, sentinel) => {
            let s = match sentinel {
                Some(text) => parse_sentinel(text)?,
                None => f64::NAN,
            };
            io::derive_mask_from_sentinel(&y, s)?
        }
        (Some(_), Some(_)) => {
            return Err(CliError::Usage(
                "--mask and --sentinel are mutually exclusive".into(),
            ))
        }
    };
    let truth = args.truth.as_ref().map(io::read_tensor).transpose()?;

    let cfg = args.solver.to_config(0.5);
    let (model, report) = tuckit::solve(&y, &mask, &cfg)?;
    let recon = model.reconstruct()?;

    std::fs::create_dir_all(&args.out_dir)?;
    io::write_tensor(&recon, args.out_dir.join("reconstructed.dtf1"))?;
    io::write_tensor(&model.core, args.out_dir.join("core.dtf1"))?;
    for (n, f) in model.factors.iter().enumerate() {
        let t = DenseTensor::from_vec(&[f.rows(), f.cols()], f.data().to_vec())
            ?;
        io::write_tensor(&t, args.out_dir.join(format!("factor_{n}.dtf1")))?;
    }

    let mut rep = String::new();
    let rank: Vec<String> = report.final_rank.iter().map(|r| r.to_string()).collect();
    writeln!(rep, "final_rank={}", rank.join(",")).ok();
    writeln!(rep, "iterations={}", report.iterations).ok();
    writeln!(rep, "converged={}", report.converged).ok();
    writeln!(rep, "observed_entries={}", mask.observed_count()).ok();
    if let Some(truth) = &truth {
        writeln!(rep, "nmse={:.9}", nmse(truth, &recon)?).ok();
    }
    if !args.reproducible {
        writeln!(rep, "wall_time_s={:.3}", report.wall_time).ok();
    }
    let trace: Vec<String> = report
        .objective_trace
        .iter()
        .map(|v| format!("{v:.9e}"))
        .collect();
    writeln!(rep, "objective_trace={}", trace.join(" ")).ok();
    std::fs::write(args.out_dir.join("report.txt"), rep)?;

    let mut man = Manifest::new("complete", args.reproducible);
    man.set("input", args.input.display());
    man.set_opt("mask", args.mask.as_ref().map(|p| p.display().to_string()));
    man.set_opt("sentinel", args.sentinel.clone());
    man.set_opt("truth", args.truth.as_ref().map(|p| p.display().to_string()));
    man.set("out-dir", args.out_dir.display());
    man.set("lambda1", cfg.lambda1);
    man.set("lambda2", cfg.lambda2);
    man.set("delta", cfg.delta);
    man.set("tmax", cfg.t_max);
    man.set("prune-tol", cfg.prune_tol);
    man.set_opt("outer-tol", cfg.outer_tol);
    man.set("max-iters", cfg.max_outer_iters);
    man.set_opt(
        "init-core-dims",
        cfg.init_core_dims.as_ref().map(|d| {
            d.iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join(",")
        }),
    );
    man.set("seed", cfg.rng_seed);
    man.set_flag("no-normalize", !cfg.normalize_input);
    man.set_flag("reproducible", args.reproducible);
    man.write(&manifest_path(&args.out_dir))?;

    println!(
        "rank {:?}, {} iterations, outputs in {}",
        report.final_rank,
        report.iterations,
        args.out_dir.display()
    );
    Ok(())
}
