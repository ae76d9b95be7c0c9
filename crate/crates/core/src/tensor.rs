//! Dense N-way tensors and column-major matrices.
//!
//! Tensors are stored with the first index fastest: the flat position of
//! `(i_1, ..., i_N)` is `i_1 + i_2*I_1 + ... + i_N*I_1*...*I_{N-1}` (all
//! zero-based). Under this layout `vec(G x_1 A1 ... x_N AN)` equals
//! `(AN ⊗ ... ⊗ A1) vec(G)`, so the usual Kronecker identities hold without
//! permutation fix-ups. Matrices are column-major for the same reason: the
//! mode-1 unfolding of a tensor is its flat buffer reinterpreted.

use crate::error::{Error, Result};
use crate::linalg;

/// Hard cap on tensor order.
pub const MAX_MODES: usize = 8;

/// Dense real tensor with an explicit dimension vector.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseTensor {
    dims: Vec<usize>,
    data: Vec<f64>,
}

/// Dense real matrix, column-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

fn check_dims(dims: &[usize]) -> Result<usize> {
    if dims.is_empty() || dims.len() > MAX_MODES {
        return Err(Error::DimOverflow(format!(
            "tensor order must be 1..={MAX_MODES}, got {}",
            dims.len()
        )));
    }
    let mut total: usize = 1;
    for &d in dims {
        if d == 0 {
            return Err(Error::DimOverflow("zero-length mode".into()));
        }
        total = total
            .checked_mul(d)
            .ok_or_else(|| Error::DimOverflow("element count overflows usize".into()))?;
    }
    Ok(total)
}

impl DenseTensor {
    pub fn zeros(dims: &[usize]) -> Result<Self> {
        let total = check_dims(dims)?;
        Ok(Self {
            dims: dims.to_vec(),
            data: vec![0.0; total],
        })
    }

    pub fn from_vec(dims: &[usize], data: Vec<f64>) -> Result<Self> {
        let total = check_dims(dims)?;
        if data.len() != total {
            return Err(Error::ShapeMismatch(format!(
                "dims {:?} need {} entries, got {}",
                dims,
                total,
                data.len()
            )));
        }
        Ok(Self {
            dims: dims.to_vec(),
            data,
        })
    }

    pub fn filled(dims: &[usize], value: f64) -> Result<Self> {
        let mut t = Self::zeros(dims)?;
        t.data.fill(value);
        Ok(t)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// Number of modes N.
    pub fn order(&self) -> usize {
        self.dims.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    /// Flat position of a zero-based multi-index.
    pub fn linear_index(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.dims.len());
        let mut pos = 0;
        let mut stride = 1;
        for (k, &i) in idx.iter().enumerate() {
            debug_assert!(i < self.dims[k]);
            pos += i * stride;
            stride *= self.dims[k];
        }
        pos
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.data[self.linear_index(idx)]
    }

    pub fn set(&mut self, idx: &[usize], value: f64) {
        let pos = self.linear_index(idx);
        self.data[pos] = value;
    }

    fn check_mode(&self, mode: usize) -> Result<()> {
        if mode >= self.dims.len() {
            return Err(Error::ModeOutOfRange {
                mode,
                order: self.dims.len(),
            });
        }
        Ok(())
    }

    /// Product of dims below `mode` (the stride of `mode`).
    fn inner_size(&self, mode: usize) -> usize {
        self.dims[..mode].iter().product()
    }

    /// Mode-n unfolding: the `dims[mode] x (len/dims[mode])` matrix whose
    /// columns are the mode-n fibers, ordered first-index-fastest over the
    /// remaining modes.
    pub fn unfold(&self, mode: usize) -> Result<Matrix> {
        self.check_mode(mode)?;
        let dn = self.dims[mode];
        let ncols = self.data.len() / dn;
        let inner = self.inner_size(mode);
        let outer = ncols / inner;
        let mut out = vec![0.0; self.data.len()];
        if mode == 0 {
            // flat buffer already is the column-major unfolding
            out.copy_from_slice(&self.data);
        } else {
            for o in 0..outer {
                let src_base = o * inner * dn;
                for i in 0..dn {
                    let src = src_base + i * inner;
                    for j in 0..inner {
                        out[i + (o * inner + j) * dn] = self.data[src + j];
                    }
                }
            }
        }
        Matrix::from_vec(dn, ncols, out)
    }

    /// Inverse of `unfold` for the given mode and dimension vector.
    pub fn fold(m: &Matrix, mode: usize, dims: &[usize]) -> Result<DenseTensor> {
        let total = check_dims(dims)?;
        if mode >= dims.len() {
            return Err(Error::ModeOutOfRange {
                mode,
                order: dims.len(),
            });
        }
        if m.rows != dims[mode] || m.rows * m.cols != total {
            return Err(Error::ShapeMismatch(format!(
                "cannot fold a {}x{} matrix into dims {:?} along mode {}",
                m.rows, m.cols, dims, mode
            )));
        }
        let dn = dims[mode];
        let inner: usize = dims[..mode].iter().product();
        let outer = total / (inner * dn);
        let mut data = vec![0.0; total];
        if mode == 0 {
            data.copy_from_slice(&m.data);
        } else {
            for o in 0..outer {
                let dst_base = o * inner * dn;
                for i in 0..dn {
                    let dst = dst_base + i * inner;
                    for j in 0..inner {
                        data[dst + j] = m.data[i + (o * inner + j) * dn];
                    }
                }
            }
        }
        DenseTensor::from_vec(dims, data)
    }

    /// n-mode product: every mode-n fiber multiplied by `a`, so that
    /// `unfold(result, mode) = a * unfold(self, mode)`.
    pub fn nmode_product(&self, a: &Matrix, mode: usize) -> Result<DenseTensor> {
        self.nmode_apply(a, mode, false)
    }

    /// n-mode product with the transpose of `a` (no copy of `a` is made).
    pub fn nmode_product_t(&self, a: &Matrix, mode: usize) -> Result<DenseTensor> {
        self.nmode_apply(a, mode, true)
    }

    fn nmode_apply(&self, a: &Matrix, mode: usize, transpose: bool) -> Result<DenseTensor> {
        self.check_mode(mode)?;
        let dn = self.dims[mode];
        let (j_out, k_in) = if transpose {
            (a.cols, a.rows)
        } else {
            (a.rows, a.cols)
        };
        if k_in != dn {
            return Err(Error::ShapeMismatch(format!(
                "factor contracts {} indices but mode {} has length {}",
                k_in, mode, dn
            )));
        }
        let mut new_dims = self.dims.clone();
        new_dims[mode] = j_out;
        let mut out = DenseTensor::zeros(&new_dims)?;
        let inner = self.inner_size(mode);
        let outer = self.data.len() / (inner * dn);
        // Column-major strides of `a`, swapped when applying the transpose.
        let (a_rs, a_cs) = if transpose {
            (a.rows as isize, 1isize)
        } else {
            (1isize, a.rows as isize)
        };
        if mode == 0 {
            // single GEMM: (J x dn) * (dn x rest)
            linalg::dgemm(
                j_out,
                dn,
                self.data.len() / dn,
                &a.data,
                a_rs,
                a_cs,
                &self.data,
                1,
                dn as isize,
                &mut out.data,
                1,
                j_out as isize,
            );
        } else {
            // per outer block: (inner x dn) * (dn x J) laid out contiguously
            for o in 0..outer {
                let src = &self.data[o * inner * dn..(o + 1) * inner * dn];
                let dst = &mut out.data[o * inner * j_out..(o + 1) * inner * j_out];
                linalg::dgemm(
                    inner,
                    dn,
                    j_out,
                    src,
                    1,
                    inner as isize,
                    &a.data,
                    a_cs,
                    a_rs,
                    dst,
                    1,
                    inner as isize,
                );
            }
        }
        Ok(out)
    }

    /// Sequential n-mode products over all modes (ascending), or all but
    /// `skip`. `factors.len()` must equal the tensor order.
    pub fn multi_mode_product(
        &self,
        factors: &[Matrix],
        skip: Option<usize>,
    ) -> Result<DenseTensor> {
        self.multi_apply(factors, skip, false)
    }

    /// Same as [`multi_mode_product`](Self::multi_mode_product) but applying
    /// each factor transposed.
    pub fn multi_mode_product_t(
        &self,
        factors: &[Matrix],
        skip: Option<usize>,
    ) -> Result<DenseTensor> {
        self.multi_apply(factors, skip, true)
    }

    fn multi_apply(
        &self,
        factors: &[Matrix],
        skip: Option<usize>,
        transpose: bool,
    ) -> Result<DenseTensor> {
        if factors.len() != self.dims.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} factors for a {}-way tensor",
                factors.len(),
                self.dims.len()
            )));
        }
        let mut cur = self.clone();
        for (n, a) in factors.iter().enumerate() {
            if skip == Some(n) {
                continue;
            }
            cur = cur.nmode_apply(a, n, transpose)?;
        }
        Ok(cur)
    }

    /// Frobenius inner product of two same-shaped tensors.
    pub fn inner(&self, other: &DenseTensor) -> Result<f64> {
        if self.dims != other.dims {
            return Err(Error::ShapeMismatch(format!(
                "inner product of {:?} and {:?}",
                self.dims, other.dims
            )));
        }
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a * b)
            .sum())
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Frobenius norms of the order-(N-1) sub-tensors along `mode`: entry i
    /// is the norm of the slab obtained by fixing index i of `mode`, which
    /// equals the Euclidean norm of row i of the mode-n unfolding.
    pub fn subtensor_norms(&self, mode: usize) -> Result<Vec<f64>> {
        self.check_mode(mode)?;
        let dn = self.dims[mode];
        let inner = self.inner_size(mode);
        let mut acc = vec![0.0f64; dn];
        // Linear traversal visits each row's entries in the same order as the
        // unfolding's columns, so these sums match unfold-row norms bitwise.
        for (e, &v) in self.data.iter().enumerate() {
            let i = (e / inner) % dn;
            acc[i] += v * v;
        }
        for a in &mut acc {
            *a = a.sqrt();
        }
        Ok(acc)
    }

    /// Keep only `indices` (in order) along `mode`.
    pub fn select(&self, mode: usize, indices: &[usize]) -> Result<DenseTensor> {
        self.check_mode(mode)?;
        let dn = self.dims[mode];
        if indices.iter().any(|&i| i >= dn) {
            return Err(Error::ShapeMismatch(format!(
                "selection index out of range for mode {mode}"
            )));
        }
        let mut new_dims = self.dims.clone();
        new_dims[mode] = indices.len();
        let inner = self.inner_size(mode);
        let outer = self.data.len() / (inner * dn);
        let mut data = Vec::with_capacity(inner * indices.len() * outer);
        for o in 0..outer {
            for &i in indices {
                let src = o * inner * dn + i * inner;
                data.extend_from_slice(&self.data[src..src + inner]);
            }
        }
        DenseTensor::from_vec(&new_dims, data)
    }

    pub fn scale(&mut self, s: f64) {
        for v in &mut self.data {
            *v *= s;
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, &v| m.max(v.abs()))
    }
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// Build from a column-major flat buffer.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::ShapeMismatch(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i + i * n] = 1.0;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        debug_assert!(r < self.rows && c < self.cols);
        self.data[r + c * self.rows]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        debug_assert!(r < self.rows && c < self.cols);
        self.data[r + c * self.rows] = v;
    }

    pub fn transpose(&self) -> Matrix {
        let mut out = Matrix::zeros(self.cols, self.rows);
        for c in 0..self.cols {
            for r in 0..self.rows {
                out.data[c + r * self.cols] = self.data[r + c * self.rows];
            }
        }
        out
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::ShapeMismatch(format!(
                "{}x{} * {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        linalg::dgemm(
            self.rows,
            self.cols,
            other.cols,
            &self.data,
            1,
            self.rows as isize,
            &other.data,
            1,
            other.rows as isize,
            &mut out.data,
            1,
            self.rows as isize,
        );
        Ok(out)
    }

    pub fn column(&self, c: usize) -> &[f64] {
        &self.data[c * self.rows..(c + 1) * self.rows]
    }

    /// Keep only `indices` (in order) as columns.
    pub fn select_columns(&self, indices: &[usize]) -> Result<Matrix> {
        if indices.iter().any(|&c| c >= self.cols) {
            return Err(Error::ShapeMismatch("column index out of range".into()));
        }
        let mut data = Vec::with_capacity(self.rows * indices.len());
        for &c in indices {
            data.extend_from_slice(self.column(c));
        }
        Matrix::from_vec(self.rows, indices.len(), data)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Euclidean norm of row `r`.
    pub fn row_norm(&self, r: usize) -> f64 {
        (0..self.cols)
            .map(|c| {
                let v = self.data[r + c * self.rows];
                v * v
            })
            .sum::<f64>()
            .sqrt()
    }
}
