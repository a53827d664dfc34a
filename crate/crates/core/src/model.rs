//! System parameters, large-system ratios and identifiability checks.

use serde::{Deserialize, Serialize};

use crate::covgen::CovarianceProfile;
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, ZERO};
use crate::pilots::PilotSet;

/// Global parameters of one uplink training instance. User 0 is the user of
/// interest, users `1..=K` are interferers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub num_antennas: usize,
    pub num_interferers: usize,
    pub pilot_length: usize,
    /// Received SNR per user (linear).
    pub snr: Vec<f64>,
    pub pathloss: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tx_power: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_var: Option<f64>,
}

impl SystemParams {
    pub fn new(
        num_antennas: usize,
        num_interferers: usize,
        pilot_length: usize,
        snr: Vec<f64>,
        pathloss: Vec<f64>,
    ) -> Result<Self> {
        let p = Self {
            num_antennas,
            num_interferers,
            pilot_length,
            snr,
            pathloss,
            tx_power: None,
            noise_var: None,
        };
        p.validate()?;
        Ok(p)
    }

    /// Same SNR and pathloss for every user.
    pub fn uniform(m: usize, k: usize, l: usize, snr: f64, pathloss: f64) -> Result<Self> {
        Self::new(m, k, l, vec![snr; k + 1], vec![pathloss; k + 1])
    }

    /// Builds the SNRs from physical quantities, `ρ_k = β_k P_k / σ²`.
    pub fn from_powers(
        m: usize,
        k: usize,
        l: usize,
        pathloss: Vec<f64>,
        tx_power: Vec<f64>,
        noise_var: f64,
    ) -> Result<Self> {
        if tx_power.len() != pathloss.len() {
            return Err(Error::dim("tx_power and pathloss lengths differ"));
        }
        if !(noise_var > 0.0) {
            return Err(Error::domain("noise variance must be positive"));
        }
        let snr = pathloss.iter().zip(&tx_power).map(|(b, p)| b * p / noise_var).collect();
        let p = Self {
            num_antennas: m,
            num_interferers: k,
            pilot_length: l,
            snr,
            pathloss,
            tx_power: Some(tx_power),
            noise_var: Some(noise_var),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn num_users(&self) -> usize {
        self.num_interferers + 1
    }

    pub fn with_pilot_length(&self, l: usize) -> Self {
        let mut p = self.clone();
        p.pilot_length = l;
        p
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.num_users();
        if self.num_antennas == 0 {
            return Err(Error::domain("number of antennas must be at least 1"));
        }
        if self.pilot_length == 0 {
            return Err(Error::domain("pilot length must be at least 1"));
        }
        if self.snr.len() != n || self.pathloss.len() != n {
            return Err(Error::dim(format!(
                "expected {n} per-user SNR and pathloss values, got {} and {}",
                self.snr.len(),
                self.pathloss.len()
            )));
        }
        if let Some(k) = self.snr.iter().position(|&r| !(r > 0.0 && r.is_finite())) {
            return Err(Error::domain(format!("SNR of user {k} must be positive and finite")));
        }
        if let Some(k) = self.pathloss.iter().position(|&b| !(b > 0.0 && b.is_finite())) {
            return Err(Error::domain(format!("pathloss of user {k} must be positive and finite")));
        }
        if let (Some(power), Some(s2)) = (&self.tx_power, self.noise_var) {
            if power.len() != n {
                return Err(Error::dim("tx_power length differs from user count"));
            }
            for k in 0..n {
                let implied = self.pathloss[k] * power[k] / s2;
                if (implied - self.snr[k]).abs() > 1e-12 * self.snr[k].abs() {
                    return Err(Error::domain(format!(
                        "SNR of user {k} ({}) inconsistent with pathloss*power/noise ({implied})",
                        self.snr[k]
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Large-system ratios of an instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticRatios {
    /// `L / K`, absent when there are no interferers.
    pub alpha_l: Option<f64>,
    /// `r_k / M` for every user `0..=K`.
    pub tau: Vec<f64>,
    /// Mean of `tau[1..]`, zero when there are no interferers.
    pub tau_bar: f64,
}

impl AsymptoticRatios {
    pub fn tau0(&self) -> f64 {
        self.tau[0]
    }

    pub fn interferer_taus(&self) -> &[f64] {
        &self.tau[1..]
    }
}

pub fn derive_ratios(params: &SystemParams, ranks: &[usize]) -> Result<AsymptoticRatios> {
    let m = params.num_antennas;
    if ranks.len() != params.num_users() {
        return Err(Error::dim(format!("expected {} ranks, got {}", params.num_users(), ranks.len())));
    }
    if let Some(k) = ranks.iter().position(|&r| r == 0 || r > m) {
        return Err(Error::domain(format!("rank {} of user {k} outside [1, {m}]", ranks[k])));
    }
    let tau: Vec<f64> = ranks.iter().map(|&r| r as f64 / m as f64).collect();
    let k = params.num_interferers;
    let (alpha_l, tau_bar) = if k == 0 {
        (None, 0.0)
    } else {
        (Some(params.pilot_length as f64 / k as f64), tau[1..].iter().sum::<f64>() / k as f64)
    };
    Ok(AsymptoticRatios { alpha_l, tau, tau_bar })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentifiabilityReport {
    /// `(1/L) Σ_k r_k / M`; must not exceed one.
    pub size_ratio: f64,
    pub size_ok: bool,
    /// Numerical rank of `(P ⊗ I_M) U`.
    pub rank: usize,
    /// `Σ_k r_k`.
    pub required_rank: usize,
    pub identifiable: bool,
}

/// Stacks `(p_k ⊗ U_k)` column blocks, i.e. `(P ⊗ I_M)·blkdiag(U_0..U_K)`.
pub(crate) fn stacked_pilot_subspaces(pilots: &PilotSet, covs: &[CovarianceProfile]) -> CMatrix {
    let p = &pilots.matrix;
    let l = p.nrows();
    let m = covs[0].dim();
    let total: usize = covs.iter().map(|c| c.rank()).sum();
    let mut out = CMatrix::from_element(m * l, total, ZERO);
    let mut col = 0;
    for (k, cov) in covs.iter().enumerate() {
        let u = &cov.eigenvectors;
        for i in 0..cov.rank() {
            for ell in 0..l {
                let pk = p[(ell, k)];
                for a in 0..m {
                    out[(ell * m + a, col)] = pk * u[(a, i)];
                }
            }
            col += 1;
        }
    }
    out
}

/// Gram matrix `U† P̃† P̃ U`, assembled blockwise as `(p_k†p_j)·U_k†U_j`.
pub fn subspace_gram(pilots: &PilotSet, covs: &[CovarianceProfile]) -> CMatrix {
    let g = pilots.gram();
    let u = concat_eigenvectors(covs);
    let w = u.adjoint() * &u;
    let sizes: Vec<usize> = covs.iter().map(|c| c.rank()).collect();
    linalg::block_hadamard(&w, &g, &sizes)
}

pub(crate) fn concat_eigenvectors(covs: &[CovarianceProfile]) -> CMatrix {
    let m = covs[0].dim();
    let total: usize = covs.iter().map(|c| c.rank()).sum();
    let mut u = CMatrix::zeros(m, total);
    let mut col = 0;
    for c in covs {
        u.view_mut((0, col), (m, c.rank())).copy_from(&c.eigenvectors);
        col += c.rank();
    }
    u
}

/// Rank of the subspace Gram matrix, eigenvalues below `λ_max·M·L·eps` count
/// as zero.
pub fn gram_rank(pilots: &PilotSet, covs: &[CovarianceProfile]) -> usize {
    let gram = subspace_gram(pilots, covs);
    let ev = linalg::hermitian_eigenvalues_desc(&gram);
    let max = ev.first().copied().unwrap_or(0.0);
    if max <= 0.0 {
        return 0;
    }
    let scale = (covs[0].dim() * pilots.length()) as f64;
    ev.iter().filter(|&&v| v > max * scale * f64::EPSILON).count()
}

pub(crate) fn check_dims(params: &SystemParams, pilots: &PilotSet, covs: &[CovarianceProfile]) -> Result<()> {
    let n = params.num_users();
    if pilots.num_users() != n {
        return Err(Error::dim(format!("pilot matrix has {} columns, expected {n}", pilots.num_users())));
    }
    if pilots.length() != params.pilot_length {
        return Err(Error::dim(format!(
            "pilot length {} differs from parameter L={}",
            pilots.length(),
            params.pilot_length
        )));
    }
    if covs.len() != n {
        return Err(Error::dim(format!("expected {n} covariance profiles, got {}", covs.len())));
    }
    if let Some(k) = covs.iter().position(|c| c.dim() != params.num_antennas) {
        return Err(Error::dim(format!(
            "covariance of user {k} is {0}x{0}, expected M={1}",
            covs[k].dim(),
            params.num_antennas
        )));
    }
    Ok(())
}

pub fn check_identifiability(
    params: &SystemParams,
    pilots: &PilotSet,
    covs: &[CovarianceProfile],
) -> Result<IdentifiabilityReport> {
    check_dims(params, pilots, covs)?;
    let m = params.num_antennas;
    let l = params.pilot_length;
    let required_rank: usize = covs.iter().map(|c| c.rank()).sum();
    let size_ratio = required_rank as f64 / (m as f64 * l as f64);
    let size_ok = size_ratio <= 1.0;
    let stacked = stacked_pilot_subspaces(pilots, covs);
    let rank = linalg::numerical_rank(&stacked, (m * l) as f64);
    Ok(IdentifiabilityReport { size_ratio, size_ok, rank, required_rank, identifiable: rank == required_rank })
}
