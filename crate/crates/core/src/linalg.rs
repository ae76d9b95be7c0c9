//! Internal linear-algebra helpers: GEMM dispatch, Kronecker products,
//! symmetric eigendecomposition and SPD solves (backed by nalgebra), and a
//! power-iteration spectral norm.

use crate::error::{Error, Result};
use crate::tensor::Matrix;
use nalgebra::{DMatrix, DVector};

/// General matrix multiply C = A*B on flat f64 buffers with explicit strides.
/// Shapes: A is m x k, B is k x n, C is m x n.
#[allow(clippy::too_many_arguments)]
pub(crate) fn dgemm(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    rsa: isize,
    csa: isize,
    b: &[f64],
    rsb: isize,
    csb: isize,
    c: &mut [f64],
    rsc: isize,
    csc: isize,
) {
    if m == 0 || n == 0 {
        return;
    }
    // matrixmultiply requires valid pointers even for k == 0.
    if k == 0 {
        c.fill(0.0);
        return;
    }
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa,
            csa,
            b.as_ptr(),
            rsb,
            csb,
            0.0,
            c.as_mut_ptr(),
            rsc,
            csc,
        );
    }
}

/// Kronecker product A ⊗ B.
pub fn kron(a: &Matrix, b: &Matrix) -> Matrix {
    let (ra, ca) = (a.rows(), a.cols());
    let (rb, cb) = (b.rows(), b.cols());
    let mut out = Matrix::zeros(ra * rb, ca * cb);
    for ja in 0..ca {
        for ia in 0..ra {
            let v = a.get(ia, ja);
            if v == 0.0 {
                continue;
            }
            for jb in 0..cb {
                for ib in 0..rb {
                    out.set(ia * rb + ib, ja * cb + jb, v * b.get(ib, jb));
                }
            }
        }
    }
    out
}

/// Reversed sequential Kronecker product A_N ⊗ A_{N-1} ⊗ ... ⊗ A_1, the
/// matrix H with vec(G x_1 A_1 ... x_N A_N) = H vec(G) under the
/// first-index-fastest layout. Intended for small test/oracle instances.
pub fn kron_reversed(factors: &[Matrix]) -> Matrix {
    assert!(!factors.is_empty());
    let mut acc = factors[factors.len() - 1].clone();
    for a in factors[..factors.len() - 1].iter().rev() {
        acc = kron(&acc, a);
    }
    acc
}

/// Largest eigenvalue of A^T A (the squared spectral norm of A), estimated
/// by power iteration: relative tolerance 1e-8, at most 1000 iterations.
pub fn spectral_norm_sq(a: &Matrix) -> f64 {
    let (rows, cols) = (a.rows(), a.cols());
    if rows == 0 || cols == 0 {
        return 0.0;
    }
    let fro_sq: f64 = a.data().iter().map(|x| x * x).sum();
    if fro_sq == 0.0 {
        return 0.0;
    }
    if cols == 1 {
        return fro_sq;
    }
    // deterministic start with broken symmetry
    let mut v: Vec<f64> = (0..cols).map(|i| 1.0 + 0.1 * i as f64).collect();
    normalize(&mut v);
    let mut av = vec![0.0; rows];
    let mut lambda = 0.0f64;
    for _ in 0..1000 {
        // av = A v
        for (r, o) in av.iter_mut().enumerate() {
            let mut s = 0.0;
            for (c, &vc) in v.iter().enumerate() {
                s += a.get(r, c) * vc;
            }
            *o = s;
        }
        // v = A^T av
        for (c, o) in v.iter_mut().enumerate() {
            let mut s = 0.0;
            for (r, &ar) in av.iter().enumerate() {
                s += a.get(r, c) * ar;
            }
            *o = s;
        }
        let next = normalize(&mut v);
        if next == 0.0 {
            return 0.0;
        }
        if (next - lambda).abs() <= 1e-8 * next.max(1e-300) {
            return next;
        }
        lambda = next;
    }
    lambda
}

fn normalize(v: &mut [f64]) -> f64 {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > 0.0 {
        for x in v.iter_mut() {
            *x /= n;
        }
    }
    n
}

/// Eigen-pairs of a symmetric matrix, eigenvalues descending, eigenvectors
/// as orthonormal columns.
pub(crate) fn symmetric_eigen_desc(g: &Matrix) -> (Vec<f64>, Matrix) {
    let n = g.rows();
    debug_assert_eq!(n, g.cols());
    let m = DMatrix::from_column_slice(n, n, g.data());
    let eig = m.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut vals = Vec::with_capacity(n);
    let mut vecs = Matrix::zeros(n, n);
    for (k, &j) in order.iter().enumerate() {
        vals.push(eig.eigenvalues[j]);
        for i in 0..n {
            vecs.set(i, k, eig.eigenvectors[(i, j)]);
        }
    }
    (vals, vecs)
}

/// Solve the symmetric positive-definite system M x = b.
pub(crate) fn solve_spd(m: &Matrix, b: &[f64]) -> Result<Vec<f64>> {
    let n = m.rows();
    debug_assert_eq!(n, m.cols());
    debug_assert_eq!(n, b.len());
    let mat = DMatrix::from_column_slice(n, n, m.data());
    let rhs = DVector::from_column_slice(b);
    match mat.clone().cholesky() {
        Some(ch) => Ok(ch.solve(&rhs).as_slice().to_vec()),
        None => {
            // fall back to LU for semidefinite edge cases
            let lu = mat.lu();
            lu.solve(&rhs)
                .map(|x| x.as_slice().to_vec())
                .ok_or_else(|| Error::NumericalFailure("singular normal equations".into()))
        }
    }
}
