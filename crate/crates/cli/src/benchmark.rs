//! `tuckit benchmark`: run synthetic completion experiments and emit the
//! results as an aligned text table plus a CSV.
//!
//! The spec file is TOML with one `[[experiment]]` block per row:
//!
//! ```toml
//! [[experiment]]
//! name = "tucker-50"
//! generator = { tucker = { core_dims = [3, 4, 5] } }
//! dims = [32, 32, 32]
//! missing_fraction = 0.5
//! snr_db = 10.0
//! trials = 10
//! rng_seed = 7
//! lambda1 = 0.5          # optional, default 0.5
//! ```
//!
//! Trials run in parallel with per-trial seeds `rng_seed + trial`.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::Args;
use rayon::prelude::*;
use serde::Deserialize;

use crate::manifest::{manifest_path, Manifest};
use crate::CliError;
use tuckit::datagen::{add_noise_snr, nmse, random_mask, trial_rng, ExperimentSpec};
use tuckit::SolverConfig;

#[derive(Args, Debug)]
pub struct BenchmarkArgs {
    /// TOML experiment list.
    #[arg(long)]
    pub spec: PathBuf,
    /// Output directory.
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Write zeros in the CSV runtime column and pin the manifest timestamp
    /// so reruns are byte-identical.
    #[arg(long, default_value_t = false)]
    pub reproducible: bool,
}

#[derive(Deserialize)]
struct SpecFile {
    #[serde(rename = "experiment")]
    experiments: Vec<ExperimentSpec>,
}

struct TrialResult {
    nmse: f64,
    rank: Vec<usize>,
    runtime_s: f64,
}

struct ExperimentResult {
    spec: ExperimentSpec,
    trials: Vec<TrialResult>,
}

fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentResult, CliError> {
    spec.validate()?;
    let trials: Vec<TrialResult> = (0..spec.trials as u64)
        .into_par_iter()
        .map(|trial| -> Result<TrialResult, tuckit::Error> {
            let mut rng = trial_rng(spec.rng_seed, trial);
            let truth = spec.generate(&mut rng)?;
            let mask = random_mask(&spec.dims, spec.missing_fraction, &mut rng)?;
            let noisy = add_noise_snr(&truth, spec.snr_db, &mask, &mut rng)?;
            let cfg = SolverConfig {
                lambda1: spec.lambda1,
                rng_seed: spec.rng_seed,
                ..Default::default()
            };
            let started = std::time::Instant::now();
            let (model, report) = tuckit::solve(&noisy, &mask, &cfg)?;
            let recon = model.reconstruct()?;
            Ok(TrialResult {
                nmse: nmse(&truth, &recon)?,
                rank: report.final_rank,
                runtime_s: started.elapsed().as_secs_f64(),
            })
        })
        .collect::<Result<_, _>>()?;
    Ok(ExperimentResult {
        spec: spec.clone(),
        trials,
    })
}

/// Most frequent value, ties resolved toward the smaller one.
fn modal(values: &[usize]) -> usize {
    let mut counts = std::collections::BTreeMap::new();
    for &v in values {
        *counts.entry(v).or_insert(0usize) += 1;
    }
    counts
        .into_iter()
        .max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0)))
        .map(|(v, _)| v)
        .unwrap_or(0)
}

/// Sample standard deviation (n-1 denominator), zero for a single value.
fn sample_std(values: &[usize]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let mean = values.iter().sum::<usize>() as f64 / n as f64;
    let ss: f64 = values.iter().map(|&v| (v as f64 - mean).powi(2)).sum();
    (ss / (n - 1) as f64).sqrt()
}

pub fn run(args: &BenchmarkArgs) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&args.spec)?;
    let file: SpecFile =
        toml::from_str(&text).map_err(|e| CliError::Format(format!("spec parse: {e}")))?;
    if file.experiments.is_empty() {
        return Err(CliError::Format("spec lists no experiments".into()));
    }
    for spec in &file.experiments {
        spec.validate()?;
    }

    let results: Vec<ExperimentResult> = file
        .experiments
        .iter()
        .map(run_experiment)
        .collect::<Result<_, _>>()?;

    std::fs::create_dir_all(&args.out_dir)?;

    // aligned text table, one row block per experiment
    let mut table = String::new();
    writeln!(
        table,
        "{:<16} {:>10} {:>16} {:>20} {:>12}",
        "spec", "NMSE", "n-Rank", "Std(R)", "runtime_s"
    )
    .ok();
    for r in &results {
        let n_modes = r.spec.dims.len();
        let mean_nmse = r.trials.iter().map(|t| t.nmse).sum::<f64>() / r.trials.len() as f64;
        let mean_rt = r.trials.iter().map(|t| t.runtime_s).sum::<f64>() / r.trials.len() as f64;
        let per_mode: Vec<Vec<usize>> = (0..n_modes)
            .map(|m| r.trials.iter().map(|t| t.rank[m]).collect())
            .collect();
        let modal_rank: Vec<String> = per_mode.iter().map(|v| modal(v).to_string()).collect();
        let stds: Vec<String> = per_mode
            .iter()
            .map(|v| format!("{:.4}", sample_std(v)))
            .collect();
        writeln!(
            table,
            "{:<16} {:>10.4} {:>16} {:>20} {:>12.4}",
            r.spec.name,
            mean_nmse,
            format!("({})", modal_rank.join(",")),
            format!("({})", stds.join(",")),
            mean_rt
        )
        .ok();
    }
    std::fs::write(args.out_dir.join("table.txt"), &table)?;
    print!("{table}");

    // CSV: spec,trial,nmse,rank_1..rank_N,runtime_s with N = widest experiment
    let max_modes = results
        .iter()
        .map(|r| r.spec.dims.len())
        .max()
        .unwrap_or(0);
    let mut csv = String::from("spec,trial");
    csv.push_str(",nmse");
    for m in 1..=max_modes {
        write!(csv, ",rank_{m}").ok();
    }
    csv.push_str(",runtime_s\n");
    for r in &results {
        let name = r.spec.name.replace(',', ";");
        for (trial, t) in r.trials.iter().enumerate() {
            write!(csv, "{name},{trial},{:.6}", t.nmse).ok();
            for m in 0..max_modes {
                match t.rank.get(m) {
                    Some(v) => write!(csv, ",{v}").ok(),
                    None => write!(csv, ",").ok(),
                };
            }
            let rt = if args.reproducible { 0.0 } else { t.runtime_s };
            writeln!(csv, ",{rt:.6}").ok();
        }
    }
    std::fs::write(args.out_dir.join("results.csv"), csv)?;

    let mut man = Manifest::new("benchmark", args.reproducible);
    man.set("spec", args.spec.display());
    man.set("out-dir", args.out_dir.display());
    man.set_flag("reproducible", args.reproducible);
    man.write(&manifest_path(&args.out_dir))?;
    Ok(())
}
