//! Equivalent for deterministic covariances and random pilots: the matrix
//! fixed point `Γ = Σ_k ρ_k Σ_k (I + Lρ_k (Γ+I)⁻¹ Σ_k)⁻¹`.
//!
//! With `Σ_k = V_k V_k†` each term is evaluated as
//! `ρ_k V_k (I + Lρ_k V_k† (Γ+I)⁻¹ V_k)⁻¹ V_k†`, which stays Hermitian and
//! only inverts `r_k × r_k` matrices besides `Γ + I`.

use log::warn;

use super::fixed_point::{iterate, FixedPointReport, SolverOptions};
use crate::covgen::CovarianceProfile;
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, C64};
use crate::model::SystemParams;

#[derive(Debug, Clone)]
pub struct GammaMatrixSystem {
    factors: Vec<CMatrix>,
    snr: Vec<f64>,
    l: usize,
    m: usize,
}

impl GammaMatrixSystem {
    /// `covs` and `snr` describe the interferers.
    pub fn new(covs: &[CovarianceProfile], snr: &[f64], l: usize, m: usize) -> Result<Self> {
        if covs.len() != snr.len() {
            return Err(Error::dim("interferer covariances and SNRs differ in length"));
        }
        if covs.iter().any(|c| c.dim() != m) {
            return Err(Error::dim(format!("interferer covariance does not match M={m}")));
        }
        if l == 0 {
            return Err(Error::domain("pilot length must be at least 1"));
        }
        Ok(Self { factors: covs.iter().map(CovarianceProfile::factor).collect(), snr: snr.to_vec(), l, m })
    }

    /// Builds the system from full parameters, `covs` holding users `1..=K`.
    pub fn from_params(covs: &[CovarianceProfile], params: &SystemParams) -> Result<Self> {
        if covs.len() != params.num_interferers {
            return Err(Error::dim(format!(
                "expected {} interferer covariances, got {}",
                params.num_interferers,
                covs.len()
            )));
        }
        Self::new(covs, &params.snr[1..], params.pilot_length, params.num_antennas)
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn map(&self, gamma: &CMatrix) -> Result<CMatrix> {
        let mut shifted = gamma.clone();
        for i in 0..self.m {
            shifted[(i, i)] += C64::new(1.0, 0.0);
        }
        let chol = linalg::cholesky(shifted)?;
        let mut out = CMatrix::zeros(self.m, self.m);
        for (v, &rho) in self.factors.iter().zip(&self.snr) {
            let qv = chol.solve(v);
            let mut small = v.adjoint() * qv * C64::new(self.l as f64 * rho, 0.0);
            for i in 0..small.nrows() {
                small[(i, i)] += C64::new(1.0, 0.0);
            }
            let x = linalg::cholesky(small)?.solve(&v.adjoint());
            out.gemm(C64::new(rho, 0.0), v, &x, C64::new(1.0, 0.0));
        }
        linalg::symmetrize(&mut out);
        Ok(out)
    }

    pub fn solve_from(&self, init: CMatrix, opts: &SolverOptions) -> Result<FixedPointReport<CMatrix>> {
        if init.nrows() != self.m || init.ncols() != self.m {
            return Err(Error::dim("initial matrix has the wrong size"));
        }
        let report = iterate(init, |g| self.map(g), opts)?;
        if !report.converged {
            warn!("matrix fixed point did not converge (residual {:.3e})", report.residual);
        }
        Ok(report)
    }
}

/// Solves from `Γ = 0`; the empty interferer set gives `Γ = 0` immediately.
pub fn solve_thm3(
    covs: &[CovarianceProfile],
    params: &SystemParams,
    opts: &SolverOptions,
) -> Result<FixedPointReport<CMatrix>> {
    let sys = GammaMatrixSystem::from_params(covs, params)?;
    sys.solve_from(CMatrix::zeros(sys.m, sys.m), opts)
}

/// `(1/M) Σ β₀λ₀ᵢ / (1 + Lρ₀λ₀ᵢ u₀ᵢ†(Γ+I)⁻¹u₀ᵢ)`.
pub fn xi_thm3(gamma: &CMatrix, cov0: &CovarianceProfile, params: &SystemParams) -> Result<f64> {
    let m = params.num_antennas;
    if gamma.nrows() != m || gamma.ncols() != m || cov0.dim() != m {
        return Err(Error::dim("Γ and Σ₀ must be M×M"));
    }
    let mut shifted = gamma.clone();
    for i in 0..m {
        shifted[(i, i)] += C64::new(1.0, 0.0);
    }
    let u = &cov0.eigenvectors;
    let z = linalg::cholesky(shifted)?.solve(u);
    let (beta0, rho0, l) = (params.pathloss[0], params.snr[0], params.pilot_length as f64);
    let total: f64 = cov0
        .eigenvalues
        .iter()
        .enumerate()
        .map(|(i, &lam)| {
            let d = u.column(i).dotc(&z.column(i)).re;
            beta0 * lam / (1.0 + l * rho0 * lam * d)
        })
        .sum();
    Ok(total / m as f64)
}
