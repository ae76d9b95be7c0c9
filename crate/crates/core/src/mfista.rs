//! Over-relaxed monotone FISTA for the weighted core subproblem.
//!
//! Minimizes `F(x) = f(x) + g(x)` over core tensors, with
//! `f(x) = lambda1 * || O * (Y - X x_1 A_1 ... x_N A_N) ||_F^2` and
//! `g(x) = <X, D * X>` for an entrywise-positive weight tensor D. The
//! gradient is evaluated in tensor form and the prox of g is diagonal, so
//! the Kronecker system matrix is never formed.

use crate::error::{Error, Result};
use crate::linalg;
use crate::mask::ObservationMask;
use crate::tensor::{DenseTensor, Matrix};

/// Inner-solver parameters: step size, over-relaxation, iteration budget.
#[derive(Debug, Clone, Copy)]
pub struct MfistaConfig {
    pub lambda1: f64,
    /// Step size, chosen in `(0, (2 - delta) / L~]`.
    pub beta: f64,
    /// Over-relaxation parameter in `(0, 2)`.
    pub delta: f64,
    pub t_max: usize,
}

/// Iterate state of the over-relaxed scheme.
#[derive(Debug, Clone)]
pub struct MfistaState {
    pub x_prev: DenseTensor,
    pub z: DenseTensor,
    pub w: DenseTensor,
    /// Momentum coefficient, `eta^{(t+1)} = (1 + sqrt(1 + 4 eta^2)) / 2`.
    pub eta: f64,
    pub beta: f64,
    pub f_best: f64,
}

/// Gradient of the data-fit term:
/// `2 lambda1 * (O * (X x A's - Y)) x A^T's`.
pub fn gradient(
    core: &DenseTensor,
    y: &DenseTensor,
    mask: &ObservationMask,
    factors: &[Matrix],
    lambda1: f64,
) -> Result<DenseTensor> {
    let recon = core.multi_mode_product(factors, None)?;
    if recon.dims() != y.dims() {
        return Err(Error::ShapeMismatch(format!(
            "model reconstructs {:?} but data is {:?}",
            recon.dims(),
            y.dims()
        )));
    }
    let mut resid = recon;
    for (i, r) in resid.data_mut().iter_mut().enumerate() {
        if mask.is_observed(i) {
            *r -= y.data()[i];
        } else {
            *r = 0.0;
        }
    }
    let mut back = resid.multi_mode_product_t(factors, None)?;
    back.scale(2.0 * lambda1);
    Ok(back)
}

/// Masked data-fit value `lambda1 * sum_observed (recon - y)^2`.
pub fn fit_value(
    core: &DenseTensor,
    y: &DenseTensor,
    mask: &ObservationMask,
    factors: &[Matrix],
    lambda1: f64,
) -> Result<f64> {
    let recon = core.multi_mode_product(factors, None)?;
    let mut s = 0.0;
    for (i, (&r, &v)) in recon.data().iter().zip(y.data()).enumerate() {
        if mask.is_observed(i) {
            let d = r - v;
            s += d * d;
        }
    }
    Ok(lambda1 * s)
}

/// Weighted quadratic penalty `sum_i d_i x_i^2`.
pub fn penalty_value(core: &DenseTensor, weights: &DenseTensor) -> f64 {
    core.data()
        .iter()
        .zip(weights.data())
        .map(|(x, d)| d * x * x)
        .sum()
}

/// Proximal operator of `g(z) = <Z, D * Z>` with step `beta`: the exact
/// minimizer of `g(z) + ||z - x||^2 / (2 beta)`, elementwise
/// `z_i = x_i / (1 + 2 beta d_i)`.
pub fn prox_weighted(x: &DenseTensor, weights: &DenseTensor, beta: f64) -> Result<DenseTensor> {
    if x.dims() != weights.dims() {
        return Err(Error::ShapeMismatch(format!(
            "prox weights {:?} vs iterate {:?}",
            weights.dims(),
            x.dims()
        )));
    }
    let mut z = x.clone();
    for (v, &d) in z.data_mut().iter_mut().zip(weights.data()) {
        *v /= 1.0 + 2.0 * beta * d;
    }
    Ok(z)
}

/// Upper bound on the Lipschitz constant of the data-fit gradient:
/// `L~ = 2 lambda1 * prod_n lambda_max(A_n^T A_n)`, each factor's largest
/// eigenvalue estimated by power iteration.
pub fn lipschitz_bound(factors: &[Matrix], lambda1: f64) -> f64 {
    let mut prod = 1.0;
    for a in factors {
        prod *= linalg::spectral_norm_sq(a);
    }
    2.0 * lambda1 * prod
}

/// Run `t_max` over-relaxed MFISTA iterations from `x0` and return the final
/// core iterate. The accepted sequence is monotone in `F = f + g` by
/// construction: each step keeps whichever of the prox candidate and the
/// previous iterate has the smaller value.
pub fn run(
    y: &DenseTensor,
    mask: &ObservationMask,
    factors: &[Matrix],
    weights: &DenseTensor,
    x0: DenseTensor,
    cfg: &MfistaConfig,
) -> Result<DenseTensor> {
    run_with_trace(y, mask, factors, weights, x0, cfg).map(|(x, _)| x)
}

/// Same as [`run`], also returning the accepted objective value after each
/// iteration (index 0 holds `F(x0)`).
pub fn run_with_trace(
    y: &DenseTensor,
    mask: &ObservationMask,
    factors: &[Matrix],
    weights: &DenseTensor,
    x0: DenseTensor,
    cfg: &MfistaConfig,
) -> Result<(DenseTensor, Vec<f64>)> {
    assert!(cfg.t_max >= 1, "t_max must be at least 1");
    assert!(cfg.beta > 0.0, "step size must be positive");

    let f0 = fit_value(&x0, y, mask, factors, cfg.lambda1)? + penalty_value(&x0, weights);
    if !f0.is_finite() {
        return Err(Error::NumericalFailure("non-finite initial objective".into()));
    }
    let mut st = MfistaState {
        x_prev: x0.clone(),
        z: x0.clone(),
        w: x0.clone(),
        eta: 1.0,
        beta: cfg.beta,
        f_best: f0,
    };
    let mut x = x0;
    let mut trace = Vec::with_capacity(cfg.t_max + 1);
    trace.push(f0);

    for _ in 0..cfg.t_max {
        let grad = gradient(&st.w, y, mask, factors, cfg.lambda1)?;
        let mut shifted = st.w.clone();
        for (s, &g) in shifted.data_mut().iter_mut().zip(grad.data()) {
            *s -= st.beta * g;
        }
        st.z = prox_weighted(&shifted, weights, st.beta)?;
        let f_z =
            fit_value(&st.z, y, mask, factors, cfg.lambda1)? + penalty_value(&st.z, weights);
        if !f_z.is_finite() {
            return Err(Error::NumericalFailure("non-finite MFISTA iterate".into()));
        }

        // monotone selection, ties go to z to keep momentum alive
        let take_z = f_z <= st.f_best + 1e-14;
        let x_new = if take_z { st.z.clone() } else { x.clone() };
        let f_new = if take_z { f_z } else { st.f_best };

        // momentum uses x^{(t)} and x^{(t-1)}; `x` still holds x^{(t-1)} here
        let eta_next = 0.5 * (1.0 + (1.0 + 4.0 * st.eta * st.eta).sqrt());
        let c_z = st.eta / eta_next;
        let c_x = (st.eta - 1.0) / eta_next;
        let c_w = st.eta / eta_next * (1.0 - cfg.delta);
        let mut w_next = x_new.clone();
        {
            let wd = w_next.data_mut();
            for (i, w) in wd.iter_mut().enumerate() {
                *w += c_z * (st.z.data()[i] - x_new.data()[i])
                    + c_x * (x_new.data()[i] - x.data()[i])
                    + c_w * (st.w.data()[i] - st.z.data()[i]);
            }
        }

        st.x_prev = x;
        st.w = w_next;
        st.eta = eta_next;
        st.f_best = f_new;
        x = x_new;
        trace.push(f_new);
    }
    Ok((x, trace))
}
