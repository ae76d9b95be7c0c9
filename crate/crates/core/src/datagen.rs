//! Synthetic tensors, random masks, SNR-calibrated noise, and recovery
//! metrics.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mask::ObservationMask;
use crate::tensor::{DenseTensor, Matrix};

/// Deterministic generator for trial `trial` of a run seeded with `seed`.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed.wrapping_add(trial))
}

fn standard_normal_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Matrix {
    let data: Vec<f64> = (0..rows * cols).map(|_| rng.sample(StandardNormal)).collect();
    Matrix::from_vec(rows, cols, data).unwrap()
}

/// Sum of `rank` equally-weighted rank-one tensors with standard-normal
/// factor entries.
pub fn gen_cp(dims: &[usize], rank: usize, rng: &mut ChaCha8Rng) -> Result<DenseTensor> {
    if rank == 0 {
        return Err(Error::ShapeMismatch("CP rank must be positive".into()));
    }
    let factors: Vec<Matrix> = dims
        .iter()
        .map(|&d| standard_normal_matrix(d, rank, rng))
        .collect();
    let mut t = DenseTensor::zeros(dims)?;
    let mut idx = vec![0usize; dims.len()];
    for e in 0..t.len() {
        let mut rem = e;
        for (k, &d) in dims.iter().enumerate() {
            idx[k] = rem % d;
            rem /= d;
        }
        let mut s = 0.0;
        for r in 0..rank {
            let mut p = 1.0;
            for (k, &i) in idx.iter().enumerate() {
                p *= factors[k].get(i, r);
            }
            s += p;
        }
        t.data_mut()[e] = s;
    }
    Ok(t)
}

/// Standard-normal core of size `core_dims` multiplied by standard-normal
/// factors along each mode.
pub fn gen_tucker(
    dims: &[usize],
    core_dims: &[usize],
    rng: &mut ChaCha8Rng,
) -> Result<DenseTensor> {
    if core_dims.len() != dims.len() || core_dims.iter().zip(dims).any(|(&r, &d)| r == 0 || r > d)
    {
        return Err(Error::ShapeMismatch(format!(
            "core dims {core_dims:?} incompatible with {dims:?}"
        )));
    }
    let total: usize = core_dims.iter().product();
    let core = DenseTensor::from_vec(
        core_dims,
        (0..total).map(|_| rng.sample(StandardNormal)).collect(),
    )?;
    let factors: Vec<Matrix> = dims
        .iter()
        .zip(core_dims)
        .map(|(&d, &r)| standard_normal_matrix(d, r, rng))
        .collect();
    core.multi_mode_product(&factors, None)
}

/// Mask with exactly `round((1 - missing_fraction) * total)` observed
/// entries, selected uniformly without replacement.
pub fn random_mask(
    dims: &[usize],
    missing_fraction: f64,
    rng: &mut ChaCha8Rng,
) -> Result<ObservationMask> {
    if !(0.0..1.0).contains(&missing_fraction) {
        return Err(Error::ShapeMismatch(format!(
            "missing fraction {missing_fraction} outside [0, 1)"
        )));
    }
    let mut mask = ObservationMask::none_observed(dims)?;
    let total = mask.len();
    let observed = ((1.0 - missing_fraction) * total as f64).round() as usize;
    if observed == 0 {
        return Err(Error::EmptyObservations);
    }
    // partial Fisher-Yates over the index pool
    let mut pool: Vec<usize> = (0..total).collect();
    for k in 0..observed {
        let j = rng.random_range(k..total);
        pool.swap(k, j);
        mask.set(pool[k], true);
    }
    Ok(mask)
}

/// Add zero-mean Gaussian noise to the observed entries only, with variance
/// chosen so the observed signal-to-noise ratio is `snr_db`. `None` leaves
/// the tensor untouched (infinite SNR).
pub fn add_noise_snr(
    t: &DenseTensor,
    snr_db: Option<f64>,
    mask: &ObservationMask,
    rng: &mut ChaCha8Rng,
) -> Result<DenseTensor> {
    let Some(db) = snr_db else {
        return Ok(t.clone());
    };
    if !db.is_finite() {
        return Err(Error::ShapeMismatch("SNR must be finite".into()));
    }
    if mask.dims() != t.dims() {
        return Err(Error::ShapeMismatch("mask dims must match tensor".into()));
    }
    let mut power = 0.0;
    for i in mask.observed_indices() {
        power += t.data()[i] * t.data()[i];
    }
    if mask.observed_count() == 0 || power == 0.0 {
        return Err(Error::NumericalFailure(
            "observed signal power is zero".into(),
        ));
    }
    power /= mask.observed_count() as f64;
    let sigma = (power / 10f64.powf(db / 10.0)).sqrt();
    let mut out = t.clone();
    for i in 0..out.len() {
        if mask.is_observed(i) {
            let n: f64 = rng.sample(StandardNormal);
            out.data_mut()[i] += sigma * n;
        }
    }
    Ok(out)
}

/// Normalized recovery error `||truth - estimate||_F / ||truth||_F`.
pub fn nmse(truth: &DenseTensor, estimate: &DenseTensor) -> Result<f64> {
    if truth.dims() != estimate.dims() {
        return Err(Error::ShapeMismatch("NMSE operands differ in shape".into()));
    }
    let denom = truth.frobenius_norm();
    if denom == 0.0 {
        return Err(Error::NumericalFailure("NMSE of a zero tensor".into()));
    }
    let mut num = 0.0;
    for (a, b) in truth.data().iter().zip(estimate.data()) {
        num += (a - b) * (a - b);
    }
    Ok(num.sqrt() / denom)
}

/// Squared variant of [`nmse`].
pub fn nmse_squared(truth: &DenseTensor, estimate: &DenseTensor) -> Result<f64> {
    nmse(truth, estimate).map(|v| v * v)
}

/// Mean squared error over the missing entries only.
pub fn mse_missing(
    truth: &DenseTensor,
    estimate: &DenseTensor,
    mask: &ObservationMask,
) -> Result<f64> {
    if truth.dims() != estimate.dims() || truth.dims() != mask.dims() {
        return Err(Error::ShapeMismatch("MSE operands differ in shape".into()));
    }
    let missing = mask.missing_count();
    if missing == 0 {
        return Err(Error::EmptyObservations);
    }
    let mut s = 0.0;
    for i in 0..truth.len() {
        if !mask.is_observed(i) {
            let d = truth.data()[i] - estimate.data()[i];
            s += d * d;
        }
    }
    Ok(s / missing as f64)
}

/// Which synthetic generator an experiment uses.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorSpec {
    Cp { rank: usize },
    Tucker { core_dims: Vec<usize> },
}

/// One benchmark configuration: generator, shape, masking, noise, trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub name: String,
    pub generator: GeneratorSpec,
    pub dims: Vec<usize>,
    pub missing_fraction: f64,
    /// `None` means noiseless.
    pub snr_db: Option<f64>,
    pub trials: usize,
    pub rng_seed: u64,
    /// Data-fit weight handed to the solver.
    #[serde(default = "default_lambda1")]
    pub lambda1: f64,
}

fn default_lambda1() -> f64 {
    0.5
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::ShapeMismatch("trials must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.missing_fraction) {
            return Err(Error::ShapeMismatch(
                "missing_fraction outside [0, 1)".into(),
            ));
        }
        match &self.generator {
            GeneratorSpec::Cp { rank } => {
                if *rank == 0 {
                    return Err(Error::ShapeMismatch("cp rank must be positive".into()));
                }
            }
            GeneratorSpec::Tucker { core_dims } => {
                if core_dims.len() != self.dims.len()
                    || core_dims.iter().zip(&self.dims).any(|(&r, &d)| r == 0 || r > d)
                {
                    return Err(Error::ShapeMismatch(
                        "tucker core_dims incompatible with dims".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Generate this experiment's ground truth for one trial.
    pub fn generate(&self, rng: &mut ChaCha8Rng) -> Result<DenseTensor> {
        match &self.generator {
            GeneratorSpec::Cp { rank } => gen_cp(&self.dims, *rank, rng),
            GeneratorSpec::Tucker { core_dims } => gen_tucker(&self.dims, core_dims, rng),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn numeric_ranks(t: &DenseTensor, rtol: f64) -> Vec<usize> {
        (0..t.order())
            .map(|n| {
                let unf = t.unfold(n).unwrap();
                let m = DMatrix::from_column_slice(unf.rows(), unf.cols(), unf.data());
                let sv = m.svd(false, false).singular_values;
                let top = sv[0];
                sv.iter().filter(|&&s| s > rtol * top).count()
            })
            .collect()
    }

    #[test]
    fn cp_rank_one_outer_product() {
        let mut rng = trial_rng(1, 0);
        let t = gen_cp(&[2, 2], 1, &mut rng).unwrap();
        assert_eq!(numeric_ranks(&t, 1e-10), vec![1, 1]);
    }

    #[test]
    fn cp_rank_six_at_scale() {
        let mut rng = trial_rng(2, 0);
        let t = gen_cp(&[32, 32, 32], 6, &mut rng).unwrap();
        // sigma_7 / sigma_1 <= 1e-10 along every mode
        assert_eq!(numeric_ranks(&t, 1e-10), vec![6, 6, 6]);
    }

    #[test]
    fn tucker_rank_matches_core() {
        let mut rng = trial_rng(3, 0);
        let t = gen_tucker(&[32, 32, 32], &[3, 4, 5], &mut rng).unwrap();
        assert_eq!(numeric_ranks(&t, 1e-10), vec![3, 4, 5]);
    }

    #[test]
    fn tucker_full_core_is_full_rank() {
        let mut rng = trial_rng(4, 0);
        let t = gen_tucker(&[4, 4, 4], &[4, 4, 4], &mut rng).unwrap();
        assert_eq!(numeric_ranks(&t, 1e-10), vec![4, 4, 4]);
    }

    #[test]
    fn generators_are_deterministic_and_finite() {
        let a = gen_cp(&[5, 4, 3], 3, &mut trial_rng(7, 1)).unwrap();
        let b = gen_cp(&[5, 4, 3], 3, &mut trial_rng(7, 1)).unwrap();
        assert_eq!(a, b);
        assert!(a.data().iter().all(|v| v.is_finite()));

        let c = gen_tucker(&[5, 4, 3], &[2, 2, 2], &mut trial_rng(8, 2)).unwrap();
        let d = gen_tucker(&[5, 4, 3], &[2, 2, 2], &mut trial_rng(8, 2)).unwrap();
        assert_eq!(c, d);
    }

    #[test]
    fn mask_counts_are_exact() {
        let mut rng = trial_rng(9, 0);
        let full = random_mask(&[4, 4], 0.0, &mut rng).unwrap();
        assert_eq!(full.observed_count(), 16);

        let half = random_mask(&[32, 32, 32], 0.5, &mut rng).unwrap();
        assert_eq!(half.observed_count(), 16384);

        assert!(random_mask(&[2, 2], 1.0, &mut rng).is_err());
    }

    #[test]
    fn mask_frequency_is_uniform() {
        let dims = [4usize, 4];
        let mut counts = vec![0usize; 16];
        for trial in 0..1000 {
            let mut rng = trial_rng(100, trial);
            let m = random_mask(&dims, 0.5, &mut rng).unwrap();
            for (i, c) in counts.iter_mut().enumerate() {
                if m.is_observed(i) {
                    *c += 1;
                }
            }
        }
        for &c in &counts {
            let freq = c as f64 / 1000.0;
            assert!((freq - 0.5).abs() <= 0.05, "per-entry frequency {freq}");
        }
    }

    #[test]
    fn noise_hits_requested_snr() {
        let mut rng = trial_rng(11, 0);
        let t = gen_tucker(&[32, 32, 32], &[3, 4, 5], &mut rng).unwrap();
        let mask = random_mask(t.dims(), 0.3, &mut rng).unwrap();
        let noisy = add_noise_snr(&t, Some(10.0), &mask, &mut rng).unwrap();

        let mut sig = 0.0;
        let mut noise = 0.0;
        for i in 0..t.len() {
            if mask.is_observed(i) {
                sig += t.data()[i] * t.data()[i];
                let d = noisy.data()[i] - t.data()[i];
                noise += d * d;
            } else {
                assert_eq!(noisy.data()[i], t.data()[i], "unobserved entry changed");
            }
        }
        let snr_db = 10.0 * (sig / noise).log10();
        assert!((snr_db - 10.0).abs() <= 0.2, "empirical SNR {snr_db} dB");
    }

    #[test]
    fn noise_none_is_identity() {
        let mut rng = trial_rng(12, 0);
        let t = gen_cp(&[3, 3], 2, &mut rng).unwrap();
        let mask = ObservationMask::all_observed(t.dims()).unwrap();
        assert_eq!(add_noise_snr(&t, None, &mask, &mut rng).unwrap(), t);
    }

    #[test]
    fn noise_rejects_zero_signal_power() {
        let mut rng = trial_rng(12, 1);
        let zero = DenseTensor::zeros(&[3, 3]).unwrap();
        let mask = ObservationMask::all_observed(&[3, 3]).unwrap();
        assert!(add_noise_snr(&zero, Some(10.0), &mask, &mut rng).is_err());
    }

    #[test]
    fn nmse_cases() {
        let truth = DenseTensor::filled(&[2, 2], 1.0).unwrap();
        assert_eq!(nmse(&truth, &truth).unwrap(), 0.0);

        let zero = DenseTensor::zeros(&[2, 2]).unwrap();
        assert_eq!(nmse(&truth, &zero).unwrap(), 1.0);
        assert!(nmse(&zero, &truth).is_err());

        // all-zeros except one recovered entry: error sqrt(3)/2
        let mut est = DenseTensor::zeros(&[2, 2]).unwrap();
        est.data_mut()[0] = 1.0;
        let got = nmse(&truth, &est).unwrap();
        assert!((got - 3f64.sqrt() / 2.0).abs() <= 1e-15);
        assert!((nmse_squared(&truth, &est).unwrap() - 0.75).abs() <= 1e-15);
    }

    #[test]
    fn nmse_scale_covariant() {
        let mut rng = trial_rng(13, 0);
        let truth = gen_cp(&[3, 4], 2, &mut rng).unwrap();
        let est = gen_cp(&[3, 4], 2, &mut rng).unwrap();
        let base = nmse(&truth, &est).unwrap();
        for c in [-3.0, 0.5, 7.0] {
            let mut ts = truth.clone();
            ts.scale(c);
            let mut es = est.clone();
            es.scale(c);
            assert!((nmse(&ts, &es).unwrap() - base).abs() <= 1e-12);
        }
    }

    #[test]
    fn mse_missing_cases() {
        let mut rng = trial_rng(14, 0);
        let truth = gen_cp(&[3, 3], 2, &mut rng).unwrap();
        let mask = random_mask(&[3, 3], 0.4, &mut rng).unwrap();
        assert_eq!(mse_missing(&truth, &truth, &mask).unwrap(), 0.0);

        let none = ObservationMask::none_observed(&[3, 3]).unwrap();
        let mut shifted = truth.clone();
        for v in shifted.data_mut() {
            *v += 1.0;
        }
        assert!((mse_missing(&truth, &shifted, &none).unwrap() - 1.0).abs() <= 1e-12);

        let full = ObservationMask::all_observed(&[3, 3]).unwrap();
        assert!(mse_missing(&truth, &truth, &full).is_err());

        // naive loop oracle
        let est = gen_cp(&[3, 3], 2, &mut rng).unwrap();
        let got = mse_missing(&truth, &est, &mask).unwrap();
        let mut s = 0.0;
        let mut m = 0;
        for i in 0..9 {
            if !mask.is_observed(i) {
                s += (truth.data()[i] - est.data()[i]).powi(2);
                m += 1;
            }
        }
        assert!((got - s / m as f64).abs() <= 1e-12 * (1.0 + got));
    }
}
