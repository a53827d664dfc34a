//! Scalar equivalent `γ_L` for isotropic interferer subspaces and the
//! limiting regimes it approaches.

use log::warn;
use serde::{Deserialize, Serialize};

use super::fixed_point::{iterate, FixedPointReport, SolverOptions};
use crate::error::{Error, Result};
use crate::model::AsymptoticRatios;
use crate::mse::mse_interference_free;

#[derive(Debug, Clone)]
pub struct GammaScalarSystem {
    taus: Vec<f64>,
    snr: Vec<f64>,
    l: f64,
}

impl GammaScalarSystem {
    pub fn new(taus: &[f64], snr: &[f64], l: usize) -> Result<Self> {
        if taus.len() != snr.len() {
            return Err(Error::dim("taus and SNRs differ in length"));
        }
        if l == 0 {
            return Err(Error::domain("pilot length must be at least 1"));
        }
        if let Some(&t) = taus.iter().find(|&&t| !(t > 0.0 && t <= 1.0)) {
            return Err(Error::domain(format!("rank ratio {t} outside (0, 1]")));
        }
        if taus.iter().any(|&t| t == 1.0) {
            warn!("rank ratio equal to one: outside the strict regime, evaluating anyway");
        }
        if let Some(&r) = snr.iter().find(|&&r| !(r > 0.0 && r.is_finite())) {
            return Err(Error::domain(format!("SNR {r} must be positive and finite")));
        }
        Ok(Self { taus: taus.to_vec(), snr: snr.to_vec(), l: l as f64 })
    }

    pub fn map(&self, gamma: f64) -> f64 {
        let g1 = 1.0 + gamma;
        let sum: f64 = self
            .taus
            .iter()
            .zip(&self.snr)
            .map(|(&t, &rho)| {
                let b = 1.0 + t + t * g1 / (self.l * rho);
                2.0 * t * g1 / (b + (b * b - 4.0 * t).max(0.0).sqrt())
            })
            .sum();
        sum / self.l
    }

    pub fn solve_from(&self, init: f64, opts: &SolverOptions) -> Result<FixedPointReport<f64>> {
        let report = iterate(init, |&g| Ok(self.map(g)), opts)?;
        if !report.converged {
            warn!("scalar fixed point did not converge (residual {:.3e})", report.residual);
        }
        Ok(report)
    }
}

/// Solves for `γ_L` from zero. `taus` and `snr` describe the interferers.
pub fn solve_gamma_scalar(taus: &[f64], snr: &[f64], l: usize, opts: &SolverOptions) -> Result<FixedPointReport<f64>> {
    GammaScalarSystem::new(taus, snr, l)?.solve_from(0.0, opts)
}

/// Whether `1 − τ̄/α ≤ (1+γ)⁻¹ ≤ 1`.
pub fn gamma_sandwich_holds(gamma: f64, tau_bar: f64, alpha: f64) -> bool {
    let inv = 1.0 / (1.0 + gamma);
    1.0 - tau_bar / alpha <= inv && inv <= 1.0
}

/// Interference-free MSE at the equivalent length `L/(1+γ)`.
pub fn xi_thm4(eigenvalues: &[f64], beta0: f64, rho0: f64, l: usize, gamma: f64, m: usize) -> f64 {
    mse_interference_free(eigenvalues, beta0, rho0, l as f64 / (1.0 + gamma), m)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    InterferenceFree,
    PilotContaminated,
    Indeterminate,
}

impl Regime {
    pub fn tag(self) -> &'static str {
        match self {
            Regime::InterferenceFree => "interference_free",
            Regime::PilotContaminated => "pilot_contaminated",
            Regime::Indeterminate => "indeterminate",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeThresholds {
    pub a: f64,
    pub b: f64,
}

impl Default for RegimeThresholds {
    fn default() -> Self {
        Self { a: 0.1, b: 0.1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaInfinity {
    pub regime: Regime,
    /// `0` when interference-free, `τ̄/(α−τ̄)` when pilot-contaminated,
    /// absent otherwise (or when `α ≤ τ̄`).
    pub gamma_inf: Option<f64>,
    pub stat_a: f64,
    pub stat_b: f64,
}

/// Classifies the finite-size system by its limiting `γ`. `snr` holds the
/// interferer SNRs.
pub fn gamma_infinity(
    ratios: &AsymptoticRatios,
    snr: &[f64],
    l: usize,
    thresholds: RegimeThresholds,
) -> Result<GammaInfinity> {
    let k = snr.len();
    if k != ratios.interferer_taus().len() {
        return Err(Error::dim("SNR list does not match the interferer count"));
    }
    let Some(alpha) = ratios.alpha_l.filter(|_| k > 0) else {
        return Ok(GammaInfinity { regime: Regime::InterferenceFree, gamma_inf: Some(0.0), stat_a: 0.0, stat_b: 0.0 });
    };
    let l = l as f64;
    let tb = ratios.tau_bar;
    let stat_a = snr.iter().map(|&r| 1.0 / (1.0 - tb / alpha + 1.0 / (l * r))).sum::<f64>() / k as f64;
    let stat_b = snr.iter().map(|&r| (1.0 / (l * r)).sqrt()).sum::<f64>() / k as f64;
    let (regime, gamma_inf) = if stat_b < thresholds.b {
        let g = (alpha > tb).then(|| tb / (alpha - tb));
        (Regime::PilotContaminated, g)
    } else if stat_a < thresholds.a {
        (Regime::InterferenceFree, Some(0.0))
    } else {
        (Regime::Indeterminate, None)
    };
    Ok(GammaInfinity { regime, gamma_inf, stat_a, stat_b })
}
