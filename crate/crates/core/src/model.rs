//! Tucker model: core tensor plus one factor matrix per mode.

use crate::error::{Error, Result};
use crate::linalg;
use crate::mask::ObservationMask;
use crate::tensor::{DenseTensor, Matrix};

/// Core tensor `R_1 x ... x R_N` with factors `A_n` of shape `I_n x R_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct TuckerModel {
    pub core: DenseTensor,
    pub factors: Vec<Matrix>,
}

impl TuckerModel {
    pub fn new(core: DenseTensor, factors: Vec<Matrix>) -> Result<Self> {
        if factors.len() != core.order() {
            return Err(Error::ShapeMismatch(format!(
                "{} factors for a {}-way core",
                factors.len(),
                core.order()
            )));
        }
        for (n, f) in factors.iter().enumerate() {
            if f.cols() != core.dims()[n] {
                return Err(Error::ShapeMismatch(format!(
                    "factor {n} has {} columns but core dim is {}",
                    f.cols(),
                    core.dims()[n]
                )));
            }
        }
        Ok(Self { core, factors })
    }

    /// Dimensions of the reconstructed tensor.
    pub fn data_dims(&self) -> Vec<usize> {
        self.factors.iter().map(|f| f.rows()).collect()
    }

    /// Current core dimensions (the estimated multilinear rank).
    pub fn core_dims(&self) -> &[usize] {
        self.core.dims()
    }

    /// Full tensor `core x_1 A_1 ... x_N A_N`.
    pub fn reconstruct(&self) -> Result<DenseTensor> {
        self.core.multi_mode_product(&self.factors, None)
    }
}

/// Initialize a Tucker model from the observed entries of `y` by higher-order
/// SVD: missing entries are zero-filled, factor `A_n` holds the leading
/// `core_dims[n]` left singular vectors of the mode-n unfolding, and the core
/// is the zero-filled tensor contracted with every `A_n^T`.
///
/// The left singular vectors come from the eigendecomposition of the mode
/// Gram matrix, so each factor always has a complete orthonormal column set
/// even when the unfolding is rank-deficient.
pub fn hosvd_init(
    y: &DenseTensor,
    mask: &ObservationMask,
    core_dims: &[usize],
) -> Result<TuckerModel> {
    let dims = y.dims();
    if core_dims.len() != dims.len() {
        return Err(Error::ShapeMismatch(format!(
            "core_dims {:?} for a {}-way tensor",
            core_dims,
            dims.len()
        )));
    }
    for (n, (&r, &d)) in core_dims.iter().zip(dims).enumerate() {
        if r == 0 || r > d {
            return Err(Error::ShapeMismatch(format!(
                "core dim {r} at mode {n} must be in 1..={d}"
            )));
        }
    }
    let zero_filled = mask.apply(y)?;
    let mut factors = Vec::with_capacity(dims.len());
    for (n, &r) in core_dims.iter().enumerate() {
        let unf = zero_filled.unfold(n)?;
        let gram = unf.matmul(&unf.transpose())?;
        let (_, vecs) = linalg::symmetric_eigen_desc(&gram);
        factors.push(vecs.select_columns(&(0..r).collect::<Vec<_>>())?);
    }
    let core = zero_filled.multi_mode_product_t(&factors, None)?;
    TuckerModel::new(core, factors)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_model(dims: &[usize], core_dims: &[usize], seed: u64) -> TuckerModel {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let total: usize = core_dims.iter().product();
        let core = DenseTensor::from_vec(
            core_dims,
            (0..total).map(|_| rng.random_range(-1.0..1.0)).collect(),
        )
        .unwrap();
        let factors = dims
            .iter()
            .zip(core_dims)
            .map(|(&d, &r)| {
                Matrix::from_vec(
                    d,
                    r,
                    (0..d * r).map(|_| rng.random_range(-1.0..1.0)).collect(),
                )
                .unwrap()
            })
            .collect();
        TuckerModel::new(core, factors).unwrap()
    }

    fn orthonormality_defect(a: &Matrix) -> f64 {
        let g = a.transpose().matmul(a).unwrap();
        let mut d = 0.0f64;
        for i in 0..g.rows() {
            for j in 0..g.cols() {
                let want = if i == j { 1.0 } else { 0.0 };
                d = d.max((g.get(i, j) - want).abs());
            }
        }
        d
    }

    #[test]
    fn reconstruct_has_data_dims() {
        let m = random_model(&[4, 5, 3], &[2, 2, 2], 1);
        assert_eq!(m.reconstruct().unwrap().dims(), &[4, 5, 3]);
        assert_eq!(m.data_dims(), vec![4, 5, 3]);
    }

    #[test]
    fn hosvd_recovers_exact_rank_tensor() {
        let truth = random_model(&[6, 5, 4], &[2, 2, 2], 7);
        let y = truth.reconstruct().unwrap();
        let mask = ObservationMask::all_observed(y.dims()).unwrap();
        let init = hosvd_init(&y, &mask, &[2, 2, 2]).unwrap();
        let recon = init.reconstruct().unwrap();
        let mut err = 0.0f64;
        for (a, b) in recon.data().iter().zip(y.data()) {
            err += (a - b) * (a - b);
        }
        assert!(
            err.sqrt() <= 1e-8 * y.frobenius_norm(),
            "reconstruction error {}",
            err.sqrt()
        );
    }

    #[test]
    fn hosvd_full_dims_is_exact_orthogonal_basis() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let dims = [3usize, 4, 2];
        let y = DenseTensor::from_vec(
            &dims,
            (0..24).map(|_| rng.random_range(-1.0..1.0)).collect(),
        )
        .unwrap();
        let mask = ObservationMask::all_observed(&dims).unwrap();
        let init = hosvd_init(&y, &mask, &dims).unwrap();
        for f in &init.factors {
            assert_eq!(f.rows(), f.cols());
            assert!(orthonormality_defect(f) <= 1e-10);
        }
        let recon = init.reconstruct().unwrap();
        let scale = y.frobenius_norm();
        for (a, b) in recon.data().iter().zip(y.data()) {
            assert!((a - b).abs() <= 1e-10 * scale);
        }
    }

    #[test]
    fn hosvd_factors_orthonormal_under_masking() {
        let truth = random_model(&[5, 4, 6], &[3, 2, 2], 11);
        let y = truth.reconstruct().unwrap();
        let mask = ObservationMask::from_fn(y.dims(), |i| i % 3 != 0).unwrap();
        let init = hosvd_init(&y, &mask, &[3, 2, 2]).unwrap();
        for f in &init.factors {
            assert!(orthonormality_defect(f) <= 1e-10);
        }
    }

    #[test]
    fn hosvd_rejects_oversized_core() {
        let y = DenseTensor::zeros(&[3, 3]).unwrap();
        let mask = ObservationMask::all_observed(&[3, 3]).unwrap();
        assert!(hosvd_init(&y, &mask, &[4, 3]).is_err());
        assert!(hosvd_init(&y, &mask, &[3]).is_err());
    }
}
