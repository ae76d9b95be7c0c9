//! Iteratively reweighted Tucker decomposition of incomplete tensors.
//!
//! The objective combines a group log-sum penalty over the order-(N-1)
//! sub-tensors of the core (one group per index per mode), a masked
//! least-squares data fit, and a ridge penalty on the factor matrices. Each
//! outer iteration majorizes the log-sum term by a weighted quadratic,
//! decreases the surrogate with a few MFISTA steps on the core followed by
//! exact row-wise ridge updates of every factor, then removes sub-tensors
//! whose norm has collapsed. The surviving core dimensions are the
//! multilinear rank estimate.

use std::time::Instant;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg;
use crate::mask::ObservationMask;
use crate::mfista::{self, MfistaConfig};
use crate::model::{hosvd_init, TuckerModel};
use crate::tensor::{DenseTensor, Matrix};

/// Canonical working scale: with `normalize_input` the observed entries are
/// rescaled so their largest magnitude is this value. The log-sum penalty is
/// not scale-free, so rank determination has an operating window in
/// `lambda1 * scale^2`; at this point the default `lambda1 = 0.5` collapses
/// noise-level sub-tensors while weak true components survive. Calibrated on
/// standard-normal synthetic tensors across missing ratios up to 80%.
pub const CANONICAL_MAX_ABS: f64 = 3.5;

/// Tuning knobs for [`solve`]. `Default` mirrors the experimental settings
/// this solver was validated with: `lambda1 = 0.5`, `lambda2 = 1`,
/// `delta = 0.1`, two inner MFISTA iterations per outer step.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Data-fit weight.
    pub lambda1: f64,
    /// Factor ridge weight.
    pub lambda2: f64,
    /// Offset inside the log-sum penalty. `None` resolves to
    /// `1e-8 * (mean squared observed magnitude + 1)` of the working data.
    pub logsum_epsilon: Option<f64>,
    /// MFISTA over-relaxation, in (0, 2).
    pub delta: f64,
    /// Inner MFISTA iterations per outer step.
    pub t_max: usize,
    /// Sub-tensors with norm at most `prune_tol * ||core||_F` are removed.
    pub prune_tol: f64,
    /// Stop once `||X_{t+1} - X_t||_F` (on common surviving indices) drops
    /// below this. `None` resolves to `1e-4 * (1 + ||O * Y||_F)` of the
    /// working data.
    pub outer_tol: Option<f64>,
    pub max_outer_iters: usize,
    /// Optional per-mode cap on the initial core dimensions; defaults to the
    /// data dimensions.
    pub init_core_dims: Option<Vec<usize>>,
    /// Carried alongside the run for reproducible trial derivation; the
    /// solver itself is deterministic.
    pub rng_seed: u64,
    /// Rescale the input so the largest observed magnitude is 1 before
    /// solving (the model is returned in original units). The penalty
    /// thresholds assume data on this canonical scale.
    pub normalize_input: bool,
    /// Largest core size `core_update_direct` will materialize.
    pub direct_core_cap: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            lambda1: 0.5,
            lambda2: 1.0,
            logsum_epsilon: None,
            delta: 0.1,
            t_max: 2,
            prune_tol: 1e-4,
            outer_tol: None,
            max_outer_iters: 300,
            init_core_dims: None,
            rng_seed: 0,
            normalize_input: true,
            direct_core_cap: 512,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.lambda1 > 0.0
            && self.lambda2 > 0.0
            && self.delta > 0.0
            && self.delta < 2.0
            && self.t_max >= 1
            && self.prune_tol >= 0.0
            && self.max_outer_iters >= 1
            && self.logsum_epsilon.is_none_or(|e| e > 0.0)
            && self.outer_tol.is_none_or(|e| e > 0.0);
        if ok {
            Ok(())
        } else {
            Err(Error::ShapeMismatch("solver config out of range".into()))
        }
    }

    /// Log-sum offset used for `y` under this config.
    pub fn resolved_epsilon(&self, y: &DenseTensor, mask: &ObservationMask) -> f64 {
        match self.logsum_epsilon {
            Some(e) => e,
            None => {
                let mut sum = 0.0;
                for i in mask.observed_indices() {
                    let v = y.data()[i];
                    sum += v * v;
                }
                let mean = if mask.observed_count() > 0 {
                    sum / mask.observed_count() as f64
                } else {
                    0.0
                };
                1e-8 * (mean + 1.0)
            }
        }
    }
}

/// Outcome summary of a [`solve`] run.
#[derive(Debug, Clone)]
pub struct SolveReport {
    /// Objective value after initialization and after every outer iteration,
    /// in working (normalized) units. Pruned sub-tensors stay accounted for
    /// as exact zeros (`ln eps` per removed index), so the sequence is
    /// comparable across prunes and non-increasing up to round-off.
    pub objective_trace: Vec<f64>,
    /// Surviving sub-tensor count per mode.
    pub final_rank: Vec<usize>,
    /// Outer iterations executed.
    pub iterations: usize,
    /// Whether the outer tolerance was reached before the iteration cap.
    pub converged: bool,
    /// Seconds of wall time.
    pub wall_time: f64,
}

/// Value of the full objective: group log-sum of core sub-tensor norms plus
/// masked data fit plus factor ridge.
pub fn objective(
    y: &DenseTensor,
    mask: &ObservationMask,
    model: &TuckerModel,
    cfg: &SolverConfig,
) -> Result<f64> {
    objective_with_eps(y, mask, model, cfg, cfg.resolved_epsilon(y, mask))
}

fn objective_with_eps(
    y: &DenseTensor,
    mask: &ObservationMask,
    model: &TuckerModel,
    cfg: &SolverConfig,
    eps: f64,
) -> Result<f64> {
    let mut logsum = 0.0;
    for n in 0..model.core.order() {
        for z in model.core.subtensor_norms(n)? {
            logsum += (z * z + eps).ln();
        }
    }
    let fit = mfista::fit_value(&model.core, y, mask, &model.factors, cfg.lambda1)?;
    let ridge: f64 = model
        .factors
        .iter()
        .map(|a| a.data().iter().map(|v| v * v).sum::<f64>())
        .sum();
    Ok(logsum + fit + cfg.lambda2 * ridge)
}

/// Weight tensor of the quadratic surrogate at the current core: entry
/// `(i_1..i_N)` is `sum_n 1 / (||X_(n,i_n)||_F^2 + eps)`.
pub fn build_weights(core: &DenseTensor, logsum_epsilon: f64) -> Result<DenseTensor> {
    let mut d = DenseTensor::zeros(core.dims())?;
    for n in 0..core.order() {
        let inv: Vec<f64> = core
            .subtensor_norms(n)?
            .into_iter()
            .map(|z| 1.0 / (z * z + logsum_epsilon))
            .collect();
        let inner: usize = core.dims()[..n].iter().product();
        let dn = core.dims()[n];
        for (e, v) in d.data_mut().iter_mut().enumerate() {
            *v += inv[(e / inner) % dn];
        }
    }
    Ok(d)
}

/// Exact minimizer of the weighted core subproblem via the materialized
/// Kronecker system `x = (H^T S H + lambda1^-1 D)^-1 H^T S y`. Only valid for
/// small cores (`direct_core_cap`); serves as the oracle for the MFISTA path
/// and as a tiny-problem fallback.
pub fn core_update_direct(
    y: &DenseTensor,
    mask: &ObservationMask,
    model: &TuckerModel,
    weights: &DenseTensor,
    cfg: &SolverConfig,
) -> Result<DenseTensor> {
    let k = model.core.len();
    if k > cfg.direct_core_cap {
        return Err(Error::ShapeMismatch(format!(
            "core of {k} entries exceeds the direct-solve cap {}",
            cfg.direct_core_cap
        )));
    }
    if weights.dims() != model.core.dims() {
        return Err(Error::ShapeMismatch("weights must match core dims".into()));
    }
    let h = linalg::kron_reversed(&model.factors);
    debug_assert_eq!(h.cols(), k);
    let mut gram = Matrix::zeros(k, k);
    let mut rhs = vec![0.0; k];
    let mut hrow = vec![0.0; k];
    for r in mask.observed_indices() {
        for (c, hc) in hrow.iter_mut().enumerate() {
            *hc = h.get(r, c);
        }
        let yr = y.data()[r];
        for a in 0..k {
            rhs[a] += hrow[a] * yr;
            for b in a..k {
                gram.set(a, b, gram.get(a, b) + hrow[a] * hrow[b]);
            }
        }
    }
    for a in 0..k {
        for b in 0..a {
            gram.set(a, b, gram.get(b, a));
        }
        gram.set(a, a, gram.get(a, a) + weights.data()[a] / cfg.lambda1);
    }
    let x = linalg::solve_spd(&gram, &rhs)?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NumericalFailure("direct core solve diverged".into()));
    }
    DenseTensor::from_vec(model.core.dims(), x)
}

/// Ridge update of one factor row against the shared regressor `phi`
/// (`prod_{k != n} I_k` rows by `R_n` columns):
/// `a = lambda1 * y S phi (lambda1 phi^T S phi + lambda2 I)^-1`
/// where `S` selects this row's observed entries.
pub fn factor_row_update(
    y_row: &[f64],
    mask_row: &[bool],
    phi: &Matrix,
    cfg: &SolverConfig,
) -> Result<Vec<f64>> {
    let r = phi.cols();
    debug_assert_eq!(y_row.len(), phi.rows());
    debug_assert_eq!(mask_row.len(), phi.rows());
    let mut normal = vec![0.0; r * r];
    let mut rhs = vec![0.0; r];
    let mut row = vec![0.0; r];
    for (j, (&obs, &yj)) in mask_row.iter().zip(y_row).enumerate() {
        if !obs {
            continue;
        }
        for (a, v) in row.iter_mut().enumerate() {
            *v = phi.get(j, a);
        }
        for a in 0..r {
            rhs[a] += row[a] * yj;
            for b in a..r {
                normal[a + b * r] += row[a] * row[b];
            }
        }
    }
    for a in 0..r {
        for b in a..r {
            let v = cfg.lambda1 * normal[a + b * r];
            normal[a + b * r] = v;
            normal[b + a * r] = v;
        }
        normal[a + a * r] += cfg.lambda2;
        rhs[a] *= cfg.lambda1;
    }
    let m = Matrix::from_vec(r, r, normal)?;
    linalg::solve_spd(&m, &rhs)
}

/// Update every row of factor `mode` against the shared regressor
/// `Phi = unfold_mode(core x_{k != mode} A_k)^T`. Rows are independent and
/// processed in parallel.
pub fn update_factor(
    y: &DenseTensor,
    mask: &ObservationMask,
    model: &TuckerModel,
    mode: usize,
    cfg: &SolverConfig,
) -> Result<Matrix> {
    if mode >= model.core.order() {
        return Err(Error::ModeOutOfRange {
            mode,
            order: model.core.order(),
        });
    }
    let partial = model.core.multi_mode_product(&model.factors, Some(mode))?;
    let phi = partial.unfold(mode)?.transpose();
    let y_unf = y.unfold(mode)?;
    let mask_rows = mask.unfold_rows(mode)?;
    let rows = y_unf.rows();
    let cols = y_unf.cols();

    let updated: Vec<Vec<f64>> = (0..rows)
        .into_par_iter()
        .map(|i| {
            let y_row: Vec<f64> = (0..cols).map(|j| y_unf.get(i, j)).collect();
            factor_row_update(&y_row, &mask_rows[i], &phi, cfg)
        })
        .collect::<Result<_>>()?;

    let mut out = Matrix::zeros(rows, phi.cols());
    for (i, row) in updated.iter().enumerate() {
        for (c, &v) in row.iter().enumerate() {
            out.set(i, c, v);
        }
    }
    Ok(out)
}

/// Drop, along every mode, the sub-tensors whose norm is at most
/// `prune_tol * max(1e-30, ||core||_F)`, together with the matching factor
/// columns. At least one index per mode survives. Also returns the surviving
/// indices per mode.
pub fn prune_detailed(
    model: &TuckerModel,
    prune_tol: f64,
) -> Result<(TuckerModel, Vec<Vec<usize>>)> {
    let core_norm = model.core.frobenius_norm();
    let threshold = prune_tol * core_norm.max(1e-30);
    let mut kept: Vec<Vec<usize>> = Vec::with_capacity(model.core.order());
    for n in 0..model.core.order() {
        let norms = model.core.subtensor_norms(n)?;
        let mut keep: Vec<usize> = (0..norms.len()).filter(|&i| norms[i] > threshold).collect();
        if keep.is_empty() {
            // keep the largest slab; ties resolve to the smaller index
            let mut best = 0;
            for (i, &z) in norms.iter().enumerate() {
                if z > norms[best] {
                    best = i;
                }
            }
            keep.push(best);
        }
        kept.push(keep);
    }
    let mut core = model.core.clone();
    let mut factors = model.factors.clone();
    for (n, keep) in kept.iter().enumerate() {
        if keep.len() != core.dims()[n] {
            core = core.select(n, keep)?;
            factors[n] = factors[n].select_columns(keep)?;
        }
    }
    Ok((TuckerModel::new(core, factors)?, kept))
}

/// [`prune_detailed`] without the index bookkeeping.
pub fn prune(model: &TuckerModel, prune_tol: f64) -> Result<TuckerModel> {
    prune_detailed(model, prune_tol).map(|(m, _)| m)
}

/// Decompose the observed entries of `y` into a compact Tucker model with
/// automatically determined multilinear rank.
///
/// Runs HOSVD initialization on the zero-filled tensor, then per outer
/// iteration: rebuild the surrogate weights from the current core, take
/// `t_max` MFISTA steps on the core, update every factor row-wise, and prune
/// collapsed sub-tensors. Stops when the core stops moving or the iteration
/// cap is reached.
pub fn solve(
    y: &DenseTensor,
    mask: &ObservationMask,
    cfg: &SolverConfig,
) -> Result<(TuckerModel, SolveReport)> {
    cfg.validate()?;
    if mask.dims() != y.dims() {
        return Err(Error::ShapeMismatch(format!(
            "mask dims {:?} vs data dims {:?}",
            mask.dims(),
            y.dims()
        )));
    }
    if mask.observed_count() == 0 {
        return Err(Error::EmptyObservations);
    }
    for i in mask.observed_indices() {
        if !y.data()[i].is_finite() {
            return Err(Error::NumericalFailure(
                "observed entry is not finite".into(),
            ));
        }
    }
    let started = Instant::now();

    // work on zero-filled data, canonically scaled
    let mut work = mask.apply(y)?;
    let mut scale = 1.0;
    if cfg.normalize_input {
        let m = work.max_abs();
        if m > 0.0 {
            scale = m / CANONICAL_MAX_ABS;
            work.scale(1.0 / scale);
        }
    }
    let eps = cfg.resolved_epsilon(&work, mask);
    let outer_tol = cfg
        .outer_tol
        .unwrap_or_else(|| 1e-4 * (1.0 + work.frobenius_norm()));

    let init_dims: Vec<usize> = match &cfg.init_core_dims {
        Some(caps) => {
            if caps.len() != y.order() {
                return Err(Error::ShapeMismatch(format!(
                    "init_core_dims {:?} for a {}-way tensor",
                    caps,
                    y.order()
                )));
            }
            caps.iter()
                .zip(y.dims())
                .map(|(&c, &d)| c.clamp(1, d))
                .collect()
        }
        None => y.dims().to_vec(),
    };

    let mut model = hosvd_init(&work, mask, &init_dims)?;
    let ln_eps = eps.ln();
    let full_space = |m: &TuckerModel, value: f64| -> f64 {
        let removed: usize = init_dims
            .iter()
            .zip(m.core_dims())
            .map(|(&a, &b)| a - b)
            .sum();
        value + removed as f64 * ln_eps
    };

    let mut trace = Vec::with_capacity(cfg.max_outer_iters + 1);
    trace.push(full_space(
        &model,
        objective_with_eps(&work, mask, &model, cfg, eps)?,
    ));

    let mut iterations = 0;
    let mut converged = false;
    for _ in 0..cfg.max_outer_iters {
        iterations += 1;
        let weights = build_weights(&model.core, eps)?;
        let l_tilde = mfista::lipschitz_bound(&model.factors, cfg.lambda1);
        let beta = if l_tilde > 0.0 {
            (2.0 - cfg.delta) / l_tilde
        } else {
            1.0
        };
        let inner_cfg = MfistaConfig {
            lambda1: cfg.lambda1,
            beta,
            delta: cfg.delta,
            t_max: cfg.t_max,
        };
        let prev_core = model.core.clone();
        model.core = mfista::run(
            &work,
            mask,
            &model.factors,
            &weights,
            model.core,
            &inner_cfg,
        )?;
        for n in 0..model.core.order() {
            model.factors[n] = update_factor(&work, mask, &model, n, cfg)?;
        }
        let (pruned, kept) = prune_detailed(&model, cfg.prune_tol)?;
        model = pruned;

        trace.push(full_space(
            &model,
            objective_with_eps(&work, mask, &model, cfg, eps)?,
        ));

        // core movement on the indices that survived this iteration
        let mut prev_common = prev_core;
        for (n, keep) in kept.iter().enumerate() {
            if keep.len() != prev_common.dims()[n] {
                prev_common = prev_common.select(n, keep)?;
            }
        }
        let mut delta_sq = 0.0;
        for (a, b) in model.core.data().iter().zip(prev_common.data()) {
            let d = a - b;
            delta_sq += d * d;
        }
        if !delta_sq.is_finite() {
            return Err(Error::NumericalFailure("core iterate diverged".into()));
        }
        if delta_sq.sqrt() <= outer_tol {
            converged = true;
            break;
        }
    }

    let final_rank = model.core_dims().to_vec();
    if scale != 1.0 {
        model.core.scale(scale);
    }
    let report = SolveReport {
        objective_trace: trace,
        final_rank,
        iterations,
        converged,
        wall_time: started.elapsed().as_secs_f64(),
    };
    Ok((model, report))
}
