//! Binary observation masks over tensors.

use crate::error::{Error, Result};
use crate::tensor::DenseTensor;

/// Marks which entries of a same-shaped tensor are observed. Bits are packed
/// in the tensor's linear (first-index-fastest) order.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationMask {
    dims: Vec<usize>,
    total: usize,
    blocks: Vec<u64>,
    observed: usize,
}

impl ObservationMask {
    pub fn all_observed(dims: &[usize]) -> Result<Self> {
        let mut m = Self::none_observed(dims)?;
        for i in 0..m.total {
            m.set(i, true);
        }
        Ok(m)
    }

    pub fn none_observed(dims: &[usize]) -> Result<Self> {
        // reuse tensor dim validation (order cap, nonzero dims)
        let probe = DenseTensor::zeros(dims)?;
        let total = probe.len();
        Ok(Self {
            dims: dims.to_vec(),
            total,
            blocks: vec![0; total.div_ceil(64)],
            observed: 0,
        })
    }

    pub fn from_fn(dims: &[usize], mut observed: impl FnMut(usize) -> bool) -> Result<Self> {
        let mut m = Self::none_observed(dims)?;
        for i in 0..m.total {
            if observed(i) {
                m.set(i, true);
            }
        }
        Ok(m)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn len(&self) -> usize {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    pub fn observed_count(&self) -> usize {
        self.observed
    }

    pub fn missing_count(&self) -> usize {
        self.total - self.observed
    }

    #[inline]
    pub fn is_observed(&self, linear: usize) -> bool {
        debug_assert!(linear < self.total);
        self.blocks[linear / 64] >> (linear % 64) & 1 == 1
    }

    pub fn set(&mut self, linear: usize, value: bool) {
        assert!(linear < self.total);
        let (blk, bit) = (linear / 64, linear % 64);
        let old = self.blocks[blk] >> bit & 1 == 1;
        if old != value {
            self.blocks[blk] ^= 1 << bit;
            if value {
                self.observed += 1;
            } else {
                self.observed -= 1;
            }
        }
    }

    /// Linear indices of all observed entries, ascending.
    pub fn observed_indices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.total).filter(|&i| self.is_observed(i))
    }

    /// Zero out the unobserved entries of `t`.
    pub fn apply(&self, t: &DenseTensor) -> Result<DenseTensor> {
        if t.dims() != self.dims.as_slice() {
            return Err(Error::ShapeMismatch(format!(
                "mask dims {:?} vs tensor dims {:?}",
                self.dims,
                t.dims()
            )));
        }
        let mut out = t.clone();
        for (i, v) in out.data_mut().iter_mut().enumerate() {
            if !self.is_observed(i) {
                *v = 0.0;
            }
        }
        Ok(out)
    }

    /// Per-row observation flags of the mode-n unfolding: `rows[i][j]` tells
    /// whether column j of row i is observed, using the same column ordering
    /// as [`DenseTensor::unfold`].
    pub fn unfold_rows(&self, mode: usize) -> Result<Vec<Vec<bool>>> {
        if mode >= self.dims.len() {
            return Err(Error::ModeOutOfRange {
                mode,
                order: self.dims.len(),
            });
        }
        let dn = self.dims[mode];
        let inner: usize = self.dims[..mode].iter().product();
        let ncols = self.total / dn;
        let mut rows = vec![vec![false; ncols]; dn];
        for e in 0..self.total {
            if self.is_observed(e) {
                let i = (e / inner) % dn;
                let j = e % inner + (e / (inner * dn)) * inner;
                rows[i][j] = true;
            }
        }
        Ok(rows)
    }

    /// Raw 64-bit blocks, least-significant bit first.
    pub(crate) fn blocks(&self) -> &[u64] {
        &self.blocks
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_track_bits() {
        let mut m = ObservationMask::none_observed(&[2, 3]).unwrap();
        assert_eq!(m.observed_count(), 0);
        m.set(0, true);
        m.set(5, true);
        m.set(5, true);
        assert_eq!(m.observed_count(), 2);
        m.set(5, false);
        assert_eq!(m.observed_count(), 1);
        assert_eq!(m.missing_count(), 5);
    }

    #[test]
    fn apply_zeroes_unobserved() {
        let t = DenseTensor::filled(&[2, 2], 3.0).unwrap();
        let m = ObservationMask::from_fn(&[2, 2], |i| i % 2 == 0).unwrap();
        let r = m.apply(&t).unwrap();
        assert_eq!(r.data(), &[3.0, 0.0, 3.0, 0.0]);
    }

    #[test]
    fn unfold_rows_matches_tensor_unfold() {
        // mark entries with a recognizable pattern and compare against the
        // unfolding of an indicator tensor
        let dims = [3usize, 2, 4];
        let m = ObservationMask::from_fn(&dims, |i| i % 3 == 1).unwrap();
        let mut ind = DenseTensor::zeros(&dims).unwrap();
        for i in 0..ind.len() {
            if m.is_observed(i) {
                ind.data_mut()[i] = 1.0;
            }
        }
        for mode in 0..3 {
            let rows = m.unfold_rows(mode).unwrap();
            let unf = ind.unfold(mode).unwrap();
            for (i, row) in rows.iter().enumerate() {
                for (j, &flag) in row.iter().enumerate() {
                    assert_eq!(flag, unf.get(i, j) == 1.0, "mode {mode} ({i},{j})");
                }
            }
        }
    }
}
