//! Exact channel-estimation error for the conventional (covariance-agnostic,
//! orthogonal pilots) and the covariance-aided LMMSE estimators.
//!
//! Everything reduces to the `r₀ × r₀` matrix
//! `Q = X†(Σ_k ρ_k p_k p_k† ⊗ Σ_k + I)⁻¹X` with `X = p₀ ⊗ U₀` and the sum
//! over the interferers. The error covariance of user 0 restricted to its
//! eigenbasis is `β₀ Λ^{1/2}(I + ρ₀Λ^{1/2}QΛ^{1/2})⁻¹Λ^{1/2}`, so the MSE is
//! its trace over `M`. The per-mode SINR is `ρ₀λ₀ᵢ Qᵢᵢ`; the sum
//! `(1/M) Σ β₀λ₀ᵢ/(1+SINRᵢ)` equals the MSE only when `Q` is diagonal
//! (orthogonal pilots, disjoint subspaces, rank one) and is a lower bound
//! otherwise.
//!
//! Writing the interference as `B B†` with columns `p_k ⊗ √(ρ_k λ_kj) u_kj`,
//! `Q` is evaluated either on the `ML × ML` matrix directly or, via the
//! Woodbury identity, on the `R × R` matrix `I + B†B` with
//! `R = Σ_{k≥1} r_k`. `B†B` factors blockwise as `(p_k†p_j)·(V_k†V_j)` so
//! it never needs the Kronecker product.

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::covgen::CovarianceProfile;
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, CVector, C64, ZERO};
use crate::model::{check_dims, SystemParams};
use crate::pilots::PilotSet;
use crate::rng::{self, Role};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MseBreakdown {
    pub total_mse: f64,
    pub per_mode_sinr: Vec<f64>,
    pub per_mode_contribution: Vec<f64>,
}

/// How the `ML × ML` resolvent is evaluated.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolvePath {
    /// Reduced when `R < ML`, dense otherwise.
    #[default]
    Auto,
    /// Woodbury-reduced `R × R` Cholesky solve.
    Reduced,
    /// Cholesky solve of the full `ML × ML` matrix.
    Dense,
}

/// MSE of the conventional estimator with orthogonal pilots, `β₀/(1+Lρ₀)`.
pub fn mse_conventional(beta0: f64, rho0: f64, l: usize) -> f64 {
    beta0 / (1.0 + l as f64 * rho0)
}

/// Error covariance of the conventional estimator,
/// `β₀/(1+Lρ₀)² (Σ₀ + Lρ₀ I)`.
pub fn error_cov_conventional(cov0: &CovarianceProfile, beta0: f64, rho0: f64, l: usize) -> CMatrix {
    let m = cov0.dim() as f64;
    let tr = cov0.trace();
    if (tr - m).abs() > 1e-6 * m {
        warn!("Tr(Σ₀) = {tr} deviates from M = {m}; the trace form no longer equals β₀/(1+Lρ₀)");
    }
    let lr = l as f64 * rho0;
    let mut c = cov0.sigma.clone();
    for i in 0..cov0.dim() {
        c[(i, i)] += C64::new(lr, 0.0);
    }
    c * C64::new(beta0 / (1.0 + lr).powi(2), 0.0)
}

/// Interference-free MSE `(1/M) Σ β₀λᵢ/(1+Lρ₀λᵢ)`. `l` may be fractional
/// (equivalent pilot length).
pub fn mse_interference_free(eigenvalues: &[f64], beta0: f64, rho0: f64, l: f64, m: usize) -> f64 {
    eigenvalues.iter().map(|&lam| beta0 * lam / (1.0 + l * rho0 * lam)).sum::<f64>() / m as f64
}

/// Upper bound `β₀/(1 + Lρ₀ M/r₀)` on the interference-free MSE when `Tr(Σ₀)=M`.
pub fn jensen_upper_bound(beta0: f64, rho0: f64, l: f64, m: usize, r0: usize) -> f64 {
    beta0 / (1.0 + l * rho0 * m as f64 / r0 as f64)
}

/// Precomputed interference structure of users `1..=K`.
#[derive(Debug, Clone)]
pub struct Interference {
    m: usize,
    sizes: Vec<usize>,
    /// `M × R`, block `k` is `√ρ_k U_k Λ_k^{1/2}`.
    v: CMatrix,
    /// `V† V`.
    w: CMatrix,
    /// `ρ_k Σ_k`, used by the dense path.
    weighted: Vec<CMatrix>,
}

impl Interference {
    /// `covs` and `snr` describe the interferers only.
    pub fn new(m: usize, covs: &[CovarianceProfile], snr: &[f64]) -> Result<Self> {
        if covs.len() != snr.len() {
            return Err(Error::dim("interferer covariances and SNRs differ in length"));
        }
        let sizes: Vec<usize> = covs.iter().map(CovarianceProfile::rank).collect();
        let total: usize = sizes.iter().sum();
        let mut v = CMatrix::zeros(m, total);
        let mut col = 0;
        for (c, &rho) in covs.iter().zip(snr) {
            if c.dim() != m {
                return Err(Error::dim(format!("interferer covariance is {0}x{0}, expected {m}", c.dim())));
            }
            let f = c.factor() * C64::new(rho.sqrt(), 0.0);
            v.view_mut((0, col), (m, c.rank())).copy_from(&f);
            col += c.rank();
        }
        let w = v.adjoint() * &v;
        let weighted = covs.iter().zip(snr).map(|(c, &rho)| &c.sigma * C64::new(rho, 0.0)).collect();
        Ok(Self { m, sizes, v, w, weighted })
    }

    pub fn num_interferers(&self) -> usize {
        self.sizes.len()
    }

    /// `R = Σ_k r_k`.
    pub fn reduced_dim(&self) -> usize {
        self.v.ncols()
    }

    fn choose(&self, path: SolvePath, l: usize) -> SolvePath {
        match path {
            SolvePath::Auto if self.reduced_dim() < self.m * l => SolvePath::Reduced,
            SolvePath::Auto => SolvePath::Dense,
            p => p,
        }
    }

    /// `I_R + (P_int†P_int) ∘ W` for the interferer columns of `pilots`.
    fn reduced_kernel(&self, gram: &CMatrix) -> CMatrix {
        let k = self.num_interferers();
        let g_int = gram.view((1, 1), (k, k)).into_owned();
        let mut kern = linalg::block_hadamard(&self.w, &g_int, &self.sizes);
        for i in 0..kern.nrows() {
            kern[(i, i)] += linalg::ONE;
        }
        kern
    }

    /// `I_ML + Σ_k ρ_k p_k p_k† ⊗ Σ_k`, plus the optional user-0 term.
    fn dense_matrix(&self, pilots: &CMatrix, user0: Option<&CMatrix>) -> CMatrix {
        let l = pilots.nrows();
        let m = self.m;
        let mut t = CMatrix::identity(m * l, m * l);
        let terms = self
            .weighted
            .iter()
            .enumerate()
            .map(|(k, s)| (k + 1, s))
            .chain(user0.map(|s| (0, s)));
        for (k, s) in terms {
            for a in 0..l {
                for b in 0..l {
                    let c = pilots[(a, k)] * pilots[(b, k)].conj();
                    let mut blk = t.view_mut((a * m, b * m), (m, m));
                    blk.zip_apply(s, |x, y| *x += c * y);
                }
            }
        }
        t
    }

    /// `X† (I + B B†)⁻¹ X` for `X = p₀ ⊗ u0`.
    pub fn quad_form_matrix(&self, pilots: &PilotSet, u0: &CMatrix, path: SolvePath) -> Result<CMatrix> {
        let p = &pilots.matrix;
        let l = p.nrows();
        let k = self.num_interferers();
        if p.ncols() != k + 1 {
            return Err(Error::dim(format!("pilot matrix has {} columns, expected {}", p.ncols(), k + 1)));
        }
        let p0_norm = C64::new(p.column(0).norm_squared(), 0.0);
        let plain = u0.adjoint() * u0 * p0_norm;
        if k == 0 || self.reduced_dim() == 0 {
            return Ok(plain);
        }
        let mut q = match self.choose(path, l) {
            SolvePath::Reduced => {
                let gram = pilots.gram();
                let kern = self.reduced_kernel(&gram);
                // B† X: block k is (p_k†p_0)·V_k† U_0
                let mut c = self.v.adjoint() * u0;
                let offs = linalg::offsets(&self.sizes);
                for (j, (&o, &r)) in offs.iter().zip(&self.sizes).enumerate() {
                    let s = gram[(j + 1, 0)];
                    c.view_mut((o, 0), (r, u0.ncols())).iter_mut().for_each(|x| *x *= s);
                }
                let z = linalg::cholesky(kern)?.solve(&c);
                plain - c.adjoint() * z
            }
            _ => {
                let t = self.dense_matrix(p, None);
                let x = kron_columns(&p.column(0).into_owned(), u0);
                let z = linalg::cholesky(t)?.solve(&x);
                x.adjoint() * z
            }
        };
        linalg::symmetrize(&mut q);
        Ok(q)
    }

    /// `blktr[(Σ_k ρ_k P̃_k Σ_k P̃_k† + I)⁻¹]` (not yet divided by `L`).
    pub fn resolvent_block_trace(&self, pilots: &PilotSet, path: SolvePath) -> Result<CMatrix> {
        let p = &pilots.matrix;
        let l = p.nrows();
        let m = self.m;
        let k = self.num_interferers();
        if k == 0 || self.reduced_dim() == 0 {
            return Ok(CMatrix::identity(m, m) * C64::new(l as f64, 0.0));
        }
        match self.choose(path, l) {
            SolvePath::Reduced => {
                // blktr(I - B C B†) = L·I - V (C ∘ Gᵀ) V†, C = (I + B†B)⁻¹
                let gram = pilots.gram();
                let kern = self.reduced_kernel(&gram);
                let c = linalg::hpd_inverse(kern)?;
                let g_int_t = gram.view((1, 1), (k, k)).transpose();
                let mixed = linalg::block_hadamard(&c, &g_int_t, &self.sizes);
                let mut out = CMatrix::identity(m, m) * C64::new(l as f64, 0.0);
                out -= &self.v * mixed * self.v.adjoint();
                linalg::symmetrize(&mut out);
                Ok(out)
            }
            _ => {
                let t = self.dense_matrix(p, None);
                let inv = linalg::hpd_inverse(t)?;
                crate::deteq::block_trace(&inv, m)
            }
        }
    }
}

/// Columns `p ⊗ u_i`.
pub(crate) fn kron_columns(p: &CVector, u: &CMatrix) -> CMatrix {
    let l = p.len();
    let m = u.nrows();
    CMatrix::from_fn(l * m, u.ncols(), |row, i| p[row / m] * u[(row % m, i)])
}

fn interference_of(params: &SystemParams, covs: &[CovarianceProfile]) -> Result<Interference> {
    Interference::new(params.num_antennas, &covs[1..], &params.snr[1..])
}

/// Per-mode covariance-aided SINRs `ρ₀λ₀ᵢ Qᵢᵢ` of user 0.
pub fn sinr_modes(pilots: &PilotSet, covs: &[CovarianceProfile], params: &SystemParams) -> Result<Vec<f64>> {
    Ok(mse_cov_aided_exact(pilots, covs, params)?.per_mode_sinr)
}

/// `(1/M) Σ β₀λᵢ/(1+SINRᵢ)`: the exact MSE when the modes decouple, a lower
/// bound on it otherwise.
pub fn mse_sinr_form(eigenvalues: &[f64], sinr: &[f64], beta0: f64, m: usize) -> f64 {
    eigenvalues.iter().zip(sinr).map(|(lam, s)| beta0 * lam / (1.0 + s)).sum::<f64>() / m as f64
}

pub(crate) fn evaluate(
    interference: &Interference,
    pilots: &PilotSet,
    cov0: &CovarianceProfile,
    rho0: f64,
    beta0: f64,
    path: SolvePath,
) -> Result<MseBreakdown> {
    let q = interference.quad_form_matrix(pilots, &cov0.eigenvectors, path)?;
    let lam = &cov0.eigenvalues;
    let r0 = lam.len();
    let sinr: Vec<f64> = (0..r0).map(|i| (rho0 * lam[i] * q[(i, i)].re).max(0.0)).collect();
    let sq: Vec<f64> = lam.iter().map(|l| l.sqrt()).collect();
    let mut kern = CMatrix::from_fn(r0, r0, |i, j| q[(i, j)] * (rho0 * sq[i] * sq[j]));
    for i in 0..r0 {
        kern[(i, i)] += linalg::ONE;
    }
    let inv = linalg::hpd_inverse(kern)?;
    let m = cov0.dim() as f64;
    let contrib: Vec<f64> = (0..r0).map(|i| beta0 * lam[i] * inv[(i, i)].re / m).collect();
    Ok(MseBreakdown { total_mse: linalg::pairwise_sum(&contrib), per_mode_sinr: sinr, per_mode_contribution: contrib })
}

/// Exact covariance-aided MSE of user 0, `(1/M) Tr` of its error covariance.
pub fn mse_cov_aided_exact(
    pilots: &PilotSet,
    covs: &[CovarianceProfile],
    params: &SystemParams,
) -> Result<MseBreakdown> {
    mse_cov_aided_exact_with(pilots, covs, params, SolvePath::Auto)
}

pub fn mse_cov_aided_exact_with(
    pilots: &PilotSet,
    covs: &[CovarianceProfile],
    params: &SystemParams,
    path: SolvePath,
) -> Result<MseBreakdown> {
    check_dims(params, pilots, covs)?;
    let interference = interference_of(params, covs)?;
    evaluate(&interference, pilots, &covs[0], params.snr[0], params.pathloss[0], path)
}

/// `(P ⊗ I_M) Σ₀` restricted to column `0` of the pilots, an `ML × M` matrix.
fn pilot0_times_sigma(p0: &CVector, sigma0: &CMatrix) -> CMatrix {
    let m = sigma0.nrows();
    CMatrix::from_fn(p0.len() * m, m, |row, col| p0[row / m] * sigma0[(row % m, col)])
}

/// Error covariance of the covariance-aided estimator of user 0,
/// `β₀(Σ₀ − ρ₀ Σ₀P̃₀†(Σ_{k=0..K} ρ_k P̃_kΣ_kP̃_k† + I)⁻¹P̃₀Σ₀)`.
pub fn error_cov_cov_aided(pilots: &PilotSet, covs: &[CovarianceProfile], params: &SystemParams) -> Result<CMatrix> {
    check_dims(params, pilots, covs)?;
    let interference = interference_of(params, covs)?;
    let rho0 = params.snr[0];
    let beta0 = params.pathloss[0];
    let s0 = &covs[0].sigma;
    let t = interference.dense_matrix(&pilots.matrix, Some(&(s0 * C64::new(rho0, 0.0))));
    let x = pilot0_times_sigma(&pilots.matrix.column(0).into_owned(), s0);
    let z = linalg::cholesky(t)?.solve(&x);
    let mut c = s0 - x.adjoint() * z * C64::new(rho0, 0.0);
    c *= C64::new(beta0, 0.0);
    linalg::symmetrize(&mut c);
    Ok(c)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    Conventional,
    CovAided,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloEstimate {
    pub mean: f64,
    pub std_err: f64,
    pub trials: usize,
}

/// Empirical `(1/M) E‖h₀ − ĥ₀‖²` over `trials` independent channel and
/// noise draws. Trial `t` uses the streams `(seed, t, channel)` and
/// `(seed, t, noise)`, so the result does not depend on the thread count.
pub fn simulate_mse(
    pilots: &PilotSet,
    covs: &[CovarianceProfile],
    params: &SystemParams,
    estimator: Estimator,
    trials: usize,
    seed: u64,
) -> Result<MonteCarloEstimate> {
    check_dims(params, pilots, covs)?;
    if trials == 0 {
        return Err(Error::domain("at least one Monte Carlo trial is required"));
    }
    let m = params.num_antennas;
    let l = params.pilot_length;
    let p = &pilots.matrix;
    let rho0 = params.snr[0];
    let p0 = p.column(0).into_owned();
    // estimator of g₀ = h₀/√β₀ in noise-normalised units: ĝ₀ = E y
    let e_adj: CMatrix = match estimator {
        Estimator::Conventional => {
            let scale = rho0.sqrt() / (1.0 + l as f64 * rho0);
            kron_columns(&p0, &CMatrix::identity(m, m)) * C64::new(scale, 0.0)
        }
        Estimator::CovAided => {
            let interference = interference_of(params, covs)?;
            let s0 = &covs[0].sigma;
            let t = interference.dense_matrix(p, Some(&(s0 * C64::new(rho0, 0.0))));
            let x = pilot0_times_sigma(&p0, s0);
            linalg::cholesky(t)?.solve(&x) * C64::new(rho0.sqrt(), 0.0)
        }
    };
    let e = e_adj.adjoint();
    let factors: Vec<CMatrix> = covs.iter().map(CovarianceProfile::factor).collect();
    let amp: Vec<f64> = params.snr.iter().map(|r| r.sqrt()).collect();
    let beta0 = params.pathloss[0];

    let errors: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut ch = rng::stream(seed, &[t as u64, Role::Channel as u64]);
            let mut nz = rng::stream(seed, &[t as u64, Role::Noise as u64]);
            let mut y = CVector::from_fn(m * l, |_, _| rng::complex_normal(&mut nz));
            let mut g0 = CVector::from_element(m, ZERO);
            for (k, f) in factors.iter().enumerate() {
                let eta = CVector::from_fn(f.ncols(), |_, _| rng::complex_normal(&mut ch));
                let g = f * eta;
                for ell in 0..l {
                    let c = p[(ell, k)] * amp[k];
                    let mut seg = y.rows_mut(ell * m, m);
                    seg.zip_apply(&g, |a, b| *a += c * b);
                }
                if k == 0 {
                    g0 = g;
                }
            }
            let est = &e * y;
            beta0 * (g0 - est).norm_squared() / m as f64
        })
        .collect();
    let (mean, std_err) = linalg::mean_and_stderr(&errors);
    Ok(MonteCarloEstimate { mean, std_err, trials })
}
