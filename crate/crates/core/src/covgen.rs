//! Spatial covariance generators and their eigenstructure.
//!
//! Every profile is stored together with its thin eigendecomposition
//! `Σ = U Λ U†` restricted to the numerically non-zero eigenvalues.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, C64};
use crate::quadrature::gauss_legendre;
use crate::rng::complex_normal_matrix;

/// Default number of Gauss–Legendre nodes for the one-ring integral.
pub const DEFAULT_QUADRATURE_NODES: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CovarianceModel {
    MaxEntropy,
    OneRingUca,
    Explicit,
}

impl CovarianceModel {
    pub fn tag(self) -> &'static str {
        match self {
            CovarianceModel::MaxEntropy => "max_entropy",
            CovarianceModel::OneRingUca => "one_ring_uca",
            CovarianceModel::Explicit => "explicit",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        match tag {
            "max_entropy" => Some(CovarianceModel::MaxEntropy),
            "one_ring_uca" => Some(CovarianceModel::OneRingUca),
            "explicit" => Some(CovarianceModel::Explicit),
            _ => None,
        }
    }
}

/// One user's spatial covariance with its thin eigendecomposition.
#[derive(Debug, Clone)]
pub struct CovarianceProfile {
    pub sigma: CMatrix,
    /// Retained eigenvalues, descending and positive.
    pub eigenvalues: Vec<f64>,
    /// `M × r` matrix with orthonormal columns.
    pub eigenvectors: CMatrix,
    pub model: CovarianceModel,
}

impl CovarianceProfile {
    pub fn dim(&self) -> usize {
        self.sigma.nrows()
    }

    pub fn rank(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn trace(&self) -> f64 {
        self.sigma.trace().re
    }

    pub fn lambda_max(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(0.0)
    }

    /// `U Λ^{1/2}`, so that `Σ = F F†`.
    pub fn factor(&self) -> CMatrix {
        let mut f = self.eigenvectors.clone();
        for (j, &l) in self.eigenvalues.iter().enumerate() {
            let s = l.sqrt();
            f.column_mut(j).iter_mut().for_each(|x| *x *= s);
        }
        f
    }

    /// Profile from retained eigenpairs; `sigma` is rebuilt as `U Λ U†`.
    pub fn from_eigen(eigenvalues: Vec<f64>, eigenvectors: CMatrix, model: CovarianceModel) -> Result<Self> {
        if eigenvalues.is_empty() {
            return Err(Error::domain("covariance must have rank at least 1"));
        }
        if eigenvectors.ncols() != eigenvalues.len() {
            return Err(Error::dim("eigenvector count differs from eigenvalue count"));
        }
        if eigenvalues.iter().any(|&l| !(l > 0.0)) {
            return Err(Error::domain("retained eigenvalues must be positive"));
        }
        let mut p = Self { sigma: CMatrix::zeros(0, 0), eigenvalues, eigenvectors, model };
        let f = p.factor();
        p.sigma = &f * f.adjoint();
        linalg::symmetrize(&mut p.sigma);
        Ok(p)
    }

    /// Profile of an arbitrary Hermitian PSD matrix. Negative round-off
    /// eigenvalues are clipped; the rank is [`effective_rank`] with
    /// `rel_threshold`.
    pub fn from_hermitian(sigma: &CMatrix, model: CovarianceModel, rel_threshold: f64) -> Result<Self> {
        if sigma.nrows() != sigma.ncols() || sigma.nrows() == 0 {
            return Err(Error::dim("covariance must be a non-empty square matrix"));
        }
        let (mut values, vectors) = linalg::hermitian_eigen_desc(sigma);
        values.iter_mut().for_each(|v| *v = v.max(0.0));
        if !(values[0] > 0.0) {
            return Err(Error::domain("covariance matrix is zero"));
        }
        let r = effective_rank(&values, rel_threshold)?;
        values.truncate(r);
        let mut p = Self::from_eigen(values, vectors.columns(0, r).into_owned(), model)?;
        // keep the supplied matrix (up to Hermitian symmetrization) when it is already PSD
        let mut s = sigma.clone();
        linalg::symmetrize(&mut s);
        if linalg::rel_frobenius(&s, &p.sigma) <= 1e-12 {
            p.sigma = s;
        }
        Ok(p)
    }

    /// Explicit profile with the default rank threshold `M·eps`.
    pub fn explicit(sigma: &CMatrix) -> Result<Self> {
        let m = sigma.nrows() as f64;
        Self::from_hermitian(sigma, CovarianceModel::Explicit, m * f64::EPSILON)
    }

    /// Returns a copy with `Tr(Σ) = target`.
    pub fn with_trace(&self, target: f64) -> Self {
        let s = target / self.eigenvalues.iter().sum::<f64>();
        let mut p = self.clone();
        p.eigenvalues.iter_mut().for_each(|l| *l *= s);
        p.sigma *= C64::new(s, 0.0);
        p
    }
}

/// Counts eigenvalues with `λ_i / λ_1 > rel_threshold`.
pub fn effective_rank(eigenvalues: &[f64], rel_threshold: f64) -> Result<usize> {
    let first = *eigenvalues.first().ok_or_else(|| Error::domain("effective rank of an empty spectrum"))?;
    if !(first > 0.0) {
        return Err(Error::domain("largest eigenvalue must be positive"));
    }
    Ok(eigenvalues.iter().filter(|&&l| l / first > rel_threshold).count())
}

/// Rank-`r` Wishart covariance `Σ = (1/r) X X†`, `X` with i.i.d. `CN(0,1)`
/// entries; `E[Tr Σ] = M`.
pub fn gen_max_entropy<R: Rng + ?Sized>(m: usize, r: usize, rng: &mut R) -> Result<CovarianceProfile> {
    if r == 0 || r > m {
        return Err(Error::domain(format!("rank {r} outside [1, {m}]")));
    }
    let x = complex_normal_matrix(m, r, rng) / C64::new((r as f64).sqrt(), 0.0);
    let svd = x.clone().svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let values: Vec<f64> = order.iter().map(|&i| svd.singular_values[i].powi(2)).collect();
    let vectors = CMatrix::from_fn(m, r, |i, j| u[(i, order[j])]);
    let mut sigma = &x * x.adjoint();
    linalg::symmetrize(&mut sigma);
    Ok(CovarianceProfile { sigma, eigenvalues: values, eigenvectors: vectors, model: CovarianceModel::MaxEntropy })
}

/// Steering-vector factor `A` of the one-ring UCA covariance, `Σ = A A†`.
/// Column `q` is `sqrt(w_q/2)·a(φ + φ'_q)` with Gauss–Legendre nodes `φ'_q`
/// on `[-√3σ, √3σ]`, so that every diagonal entry of `A A†` equals one.
pub fn one_ring_factor(m: usize, azimuth: f64, spread: f64, nodes: usize) -> CMatrix {
    let (x, w) = gauss_legendre(nodes);
    let half_width = 3.0_f64.sqrt() * spread;
    let half_m = m as f64 / 2.0;
    CMatrix::from_fn(m, nodes, |n, q| {
        let theta = n as f64 * 2.0 * PI / m as f64;
        let phase = -half_m * (azimuth + half_width * x[q] - theta).cos();
        C64::from_polar((w[q] / 2.0).sqrt(), phase)
    })
}

/// The one-ring integral before any post-processing (diagonal entries one).
pub fn one_ring_raw(m: usize, azimuth: f64, spread: f64, nodes: usize) -> CMatrix {
    let a = one_ring_factor(m, azimuth, spread, nodes);
    let mut s = &a * a.adjoint();
    linalg::symmetrize(&mut s);
    s
}

/// One-ring covariance of a uniform circular array with half-wavelength
/// spacing. `azimuth = None` draws it uniformly in `[0, 2π)` from `rng`.
///
/// The spectrum is obtained from the SVD of the quadrature factor, truncated
/// at `λ_i/λ_1 > M·eps` and rescaled so that `Tr(Σ) = M`.
pub fn gen_one_ring_uca<R: Rng + ?Sized>(
    m: usize,
    azimuth: Option<f64>,
    spread: f64,
    quadrature_nodes: usize,
    rng: &mut R,
) -> Result<CovarianceProfile> {
    if !(spread > 0.0 && spread.is_finite()) {
        return Err(Error::domain(format!("angular spread must be positive, got {spread}")));
    }
    if quadrature_nodes < 16 {
        return Err(Error::domain("one-ring quadrature needs at least 16 nodes"));
    }
    if m == 0 {
        return Err(Error::domain("number of antennas must be at least 1"));
    }
    let phi = match azimuth {
        Some(p) => p,
        None => rng.random_range(0.0..2.0 * PI),
    };
    let a = one_ring_factor(m, phi, spread, quadrature_nodes);
    let svd = a.svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&x, &y| svd.singular_values[y].total_cmp(&svd.singular_values[x]));
    let values: Vec<f64> = order.iter().map(|&i| svd.singular_values[i].powi(2)).collect();
    let r = effective_rank(&values, m as f64 * f64::EPSILON)?;
    let kept: Vec<f64> = values[..r].to_vec();
    let vectors = CMatrix::from_fn(m, r, |i, j| u[(i, order[j])]);
    let p = CovarianceProfile::from_eigen(kept, vectors, CovarianceModel::OneRingUca)?;
    Ok(p.with_trace(m as f64))
}

/// `λ_max((1/L) Σ_k U_k U_k†)`.
pub fn assumption3_norm(covs: &[CovarianceProfile], l: usize) -> Result<f64> {
    let m = covs.first().ok_or_else(|| Error::domain("no covariance profiles"))?.dim();
    if covs.iter().any(|c| c.dim() != m) {
        return Err(Error::dim("covariance profiles have different sizes"));
    }
    let mut acc = CMatrix::zeros(m, m);
    for c in covs {
        acc += &c.eigenvectors * c.eigenvectors.adjoint();
    }
    acc /= C64::new(l as f64, 0.0);
    Ok(linalg::lambda_max(&acc))
}
