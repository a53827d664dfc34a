//! Dense complex linear-algebra helpers on top of `nalgebra`.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);

#[inline]
pub(crate) fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Replaces `m` by `(m + m†)/2`.
pub fn symmetrize(m: &mut CMatrix) {
    let n = m.nrows();
    debug_assert_eq!(n, m.ncols());
    for j in 0..n {
        m[(j, j)] = re(m[(j, j)].re);
        for i in (j + 1)..n {
            let avg = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
            m[(i, j)] = avg;
            m[(j, i)] = avg.conj();
        }
    }
}

/// Eigen-decomposition of a Hermitian matrix with eigenvalues sorted
/// descending; column `i` of the returned matrix pairs with value `i`.
pub fn hermitian_eigen_desc(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let mut h = m.clone();
    symmetrize(&mut h);
    let eig = h.symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(m.nrows(), order.len(), |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// Eigenvalues of a Hermitian matrix, descending.
pub fn hermitian_eigenvalues_desc(m: &CMatrix) -> Vec<f64> {
    let mut h = m.clone();
    symmetrize(&mut h);
    let mut v: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

pub fn lambda_min(m: &CMatrix) -> f64 {
    hermitian_eigenvalues_desc(m).last().copied().unwrap_or(0.0)
}

pub fn lambda_max(m: &CMatrix) -> f64 {
    hermitian_eigenvalues_desc(m).first().copied().unwrap_or(0.0)
}

/// Spectral norm of a Hermitian matrix (largest eigenvalue modulus).
pub fn hermitian_norm(m: &CMatrix) -> f64 {
    let v = hermitian_eigenvalues_desc(m);
    match (v.first(), v.last()) {
        (Some(a), Some(b)) => a.abs().max(b.abs()),
        _ => 0.0,
    }
}

/// Cholesky factorization of a Hermitian positive-definite matrix.
pub fn cholesky(m: CMatrix) -> Result<Cholesky<C64, Dyn>> {
    let n = m.nrows();
    Cholesky::new(m).ok_or_else(|| Error::Numerical(format!("{n}x{n} matrix is not positive definite")))
}

/// Inverse of a Hermitian positive-definite matrix, returned Hermitian.
pub fn hpd_inverse(m: CMatrix) -> Result<CMatrix> {
    let mut inv = cholesky(m)?.inverse();
    symmetrize(&mut inv);
    Ok(inv)
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Number of singular values above `max_sv * scale * eps`.
pub fn numerical_rank(m: &CMatrix, scale: f64) -> usize {
    if m.is_empty() {
        return 0;
    }
    let sv = m.clone().singular_values();
    let max = sv.iter().copied().fold(0.0_f64, f64::max);
    if max == 0.0 {
        return 0;
    }
    let thr = max * scale * f64::EPSILON;
    sv.iter().filter(|&&s| s > thr).count()
}

/// Multiplies each block `(k, j)` of `w` (block sizes `sizes`) by `g[(k, j)]`.
pub(crate) fn block_hadamard(w: &CMatrix, g: &CMatrix, sizes: &[usize]) -> CMatrix {
    let offsets = offsets(sizes);
    let mut out = w.clone();
    for (k, (&ok, &rk)) in offsets.iter().zip(sizes).enumerate() {
        for (j, (&oj, &rj)) in offsets.iter().zip(sizes).enumerate() {
            let s = g[(k, j)];
            out.view_mut((ok, oj), (rk, rj)).scale_mut_complex(s);
        }
    }
    out
}

pub(crate) fn offsets(sizes: &[usize]) -> Vec<usize> {
    let mut acc = 0;
    sizes
        .iter()
        .map(|&s| {
            let o = acc;
            acc += s;
            o
        })
        .collect()
}

trait ScaleComplex {
    fn scale_mut_complex(&mut self, s: C64);
}

impl<S> ScaleComplex for nalgebra::Matrix<C64, Dyn, Dyn, S>
where
    S: nalgebra::StorageMut<C64, Dyn, Dyn>,
{
    fn scale_mut_complex(&mut self, s: C64) {
        for x in self.iter_mut() {
            *x *= s;
        }
    }
}

/// Pairwise (cascade) summation; result does not depend on how the input
/// was produced, only on its order.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const BASE: usize = 32;
    if xs.len() <= BASE {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Mean and standard error (sample std / sqrt(n)) with pairwise sums.
pub fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = pairwise_sum(xs) / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let sq: Vec<f64> = xs.iter().map(|x| (x - mean) * (x - mean)).collect();
    let var = pairwise_sum(&sq) / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Relative Frobenius distance `‖a - b‖ / max(‖a‖, ‖b‖)`; zero when both vanish.
pub fn rel_frobenius(a: &CMatrix, b: &CMatrix) -> f64 {
    let d = (a - b).norm();
    let s = a.norm().max(b.norm());
    if d == 0.0 {
        0.0
    } else {
        d / s.max(f64::MIN_POSITIVE)
    }
}
