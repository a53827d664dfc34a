//! Minimum pilot length for which covariance-aided estimation with random
//! pilots is at least as accurate as orthogonal training of all `K+1` users.

use serde::{Deserialize, Serialize};

use crate::covgen::CovarianceProfile;
use crate::error::{Error, Result};
use crate::model::{derive_ratios, SystemParams};
use crate::mse::{evaluate, mse_conventional, mse_interference_free, Interference, SolvePath};
use crate::pilots::gen_random_phase;
use crate::rng::{self, Role};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PilotLengthResult {
    pub l_star: usize,
    pub l_approx: usize,
    /// `(K+1) / L*`.
    pub delta: f64,
    /// `1 / (τ₀ + τ̄)`.
    pub delta_bar: f64,
    pub feasible: bool,
    /// `τ₀ + τ̄ ≥ 1`: shorter non-orthogonal pilots cannot help asymptotically.
    pub orthogonal_preferable: bool,
}

/// `⌈(K+1)τ₀ + Kτ̄⌉`, at least one.
pub fn approx_min_length(k: usize, tau0: f64, tau_bar: f64) -> usize {
    let x = (k as f64 + 1.0) * tau0 + k as f64 * tau_bar;
    // absorb rounding in sums of exact fractions
    let n = (x - 1e-9 * x.max(1.0)).ceil();
    (n as usize).max(1)
}

pub fn orthogonal_preferable(tau0: f64, tau_bar: f64) -> bool {
    tau0 + tau_bar >= 1.0
}

/// `(K+1) / L`.
pub fn reduction_ratio(k: usize, l: usize) -> f64 {
    (k as f64 + 1.0) / l as f64
}

/// `1 / (τ₀ + τ̄)`.
pub fn limit_ratio(tau0: f64, tau_bar: f64) -> f64 {
    1.0 / (tau0 + tau_bar)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchOptions {
    /// Multiplier applied to the orthogonal-pilot target MSE.
    pub target_scale: f64,
    pub path: SolvePath,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self { target_scale: 1.0, path: SolvePath::Auto }
    }
}

/// Exhaustive search over `L = 1..=K+1`. Each length draws its own
/// random-phase pilots from the stream `(seed, pilot, L)`; the pilot length
/// in `params` is ignored.
pub fn search_min_length(
    covs: &[CovarianceProfile],
    params: &SystemParams,
    seed: u64,
    opts: &SearchOptions,
) -> Result<PilotLengthResult> {
    let n = params.num_users();
    let m = params.num_antennas;
    if covs.len() != n {
        return Err(Error::dim(format!("expected {n} covariance profiles, got {}", covs.len())));
    }
    if covs.iter().any(|c| c.dim() != m) {
        return Err(Error::dim(format!("covariance size does not match M={m}")));
    }
    if !(opts.target_scale > 0.0) {
        return Err(Error::domain("target scale must be positive"));
    }
    let k = params.num_interferers;
    let ranks: Vec<usize> = covs.iter().map(CovarianceProfile::rank).collect();
    let ratios = derive_ratios(params, &ranks)?;
    let l_approx = approx_min_length(k, ratios.tau0(), ratios.tau_bar);
    let delta_bar = limit_ratio(ratios.tau0(), ratios.tau_bar);

    let (beta0, rho0) = (params.pathloss[0], params.snr[0]);
    let target = mse_conventional(beta0, rho0, n) * opts.target_scale;
    let interference = Interference::new(m, &covs[1..], &params.snr[1..])?;
    let mut found = None;
    for l in 1..=n {
        // interference only adds error, so lengths whose interference-free
        // MSE misses the target are skipped without a solve
        if mse_interference_free(&covs[0].eigenvalues, beta0, rho0, l as f64, m) > target {
            continue;
        }
        let mut r = rng::stream(seed, &[Role::Pilot as u64, l as u64]);
        let pilots = gen_random_phase(l, n, &mut r);
        if evaluate(&interference, &pilots, &covs[0], rho0, beta0, opts.path)?.total_mse <= target {
            found = Some(l);
            break;
        }
    }
    let l_star = found.unwrap_or(n);
    Ok(PilotLengthResult {
        l_star,
        l_approx,
        delta: reduction_ratio(k, l_star),
        delta_bar,
        feasible: found.is_some(),
        orthogonal_preferable: orthogonal_preferable(ratios.tau0(), ratios.tau_bar),
    })
}
