//! Equivalent for deterministic pilots and random (isotropic-subspace)
//! covariances. Only `L × L` solves are needed.

use log::warn;
use nalgebra::DVector;

use super::fixed_point::{iterate, FixedPointReport, SolverOptions};
use crate::covgen::CovarianceProfile;
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, C64};
use crate::model::SystemParams;
use crate::mse::mse_interference_free;
use crate::pilots::PilotSet;

/// The system `ι = F(ι)` on `R₊^K`.
#[derive(Debug, Clone)]
pub struct FixedPilotSystem {
    pilots: CMatrix,
    snr: Vec<f64>,
    taus: Vec<f64>,
    lam0: Vec<f64>,
    beta0: f64,
    m: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixedPilotSolution {
    pub report: FixedPointReport<DVector<f64>>,
    pub xi: f64,
    /// `p₀† S⁻¹ p₀` at the solution.
    pub effective_length: f64,
}

impl FixedPilotSystem {
    /// `ranks` are the interferer ranks `r_1..r_K`.
    pub fn new(pilots: &PilotSet, cov0: &CovarianceProfile, params: &SystemParams, ranks: &[usize]) -> Result<Self> {
        let k = params.num_interferers;
        if pilots.num_users() != k + 1 || pilots.length() != params.pilot_length {
            return Err(Error::dim(format!(
                "pilot matrix is {}x{}, expected {}x{}",
                pilots.length(),
                pilots.num_users(),
                params.pilot_length,
                k + 1
            )));
        }
        if ranks.len() != k {
            return Err(Error::dim(format!("expected {k} interferer ranks, got {}", ranks.len())));
        }
        let m = params.num_antennas;
        if cov0.dim() != m {
            return Err(Error::dim("covariance of user 0 does not match M"));
        }
        if let Some(&r) = ranks.iter().find(|&&r| r == 0 || r > m) {
            return Err(Error::domain(format!("interferer rank {r} outside [1, {m}]")));
        }
        Ok(Self {
            pilots: pilots.matrix.clone(),
            snr: params.snr.clone(),
            taus: ranks.iter().map(|&r| r as f64 / m as f64).collect(),
            lam0: cov0.eigenvalues.clone(),
            beta0: params.pathloss[0],
            m,
        })
    }

    pub fn num_interferers(&self) -> usize {
        self.taus.len()
    }

    /// `S⁻¹P` for `S = I + Σ_k ρ_k/(1+ι_k) p_k p_k†`.
    fn resolvent_times_pilots(&self, iota: &DVector<f64>) -> Result<CMatrix> {
        let l = self.pilots.nrows();
        let mut s = CMatrix::identity(l, l);
        for k in 1..=self.num_interferers() {
            let w = self.snr[k] / (1.0 + iota[k - 1]);
            let p = self.pilots.column(k);
            s.gerc(C64::new(w, 0.0), &p, &p, C64::new(1.0, 0.0));
        }
        Ok(linalg::cholesky(s)?.solve(&self.pilots))
    }

    fn mode_factor(&self, a: f64) -> f64 {
        let rho0 = self.snr[0];
        self.lam0.iter().map(|&l| rho0 * l / (1.0 + rho0 * l * a)).sum::<f64>() / self.m as f64
    }

    /// One application of the right-hand side.
    pub fn map(&self, iota: &DVector<f64>) -> Result<DVector<f64>> {
        let z = self.resolvent_times_pilots(iota)?;
        let p = &self.pilots;
        let a = p.column(0).dotc(&z.column(0)).re;
        let f = self.mode_factor(a);
        Ok(DVector::from_fn(self.num_interferers(), |j, _| {
            let k = j + 1;
            let d = p.column(k).dotc(&z.column(k)).re;
            let c = p.column(k).dotc(&z.column(0)).norm_sqr();
            // nonnegative by Cauchy-Schwarz; clip rounding
            (self.snr[k] / self.taus[j] * (d - c * f)).max(0.0)
        }))
    }

    /// `p₀† S⁻¹ p₀`.
    pub fn effective_length(&self, iota: &DVector<f64>) -> Result<f64> {
        let z = self.resolvent_times_pilots(iota)?;
        Ok(self.pilots.column(0).dotc(&z.column(0)).re)
    }

    pub fn xi(&self, iota: &DVector<f64>) -> Result<f64> {
        let a = self.effective_length(iota)?;
        Ok(mse_interference_free(&self.lam0, self.beta0, self.snr[0], a, self.m))
    }

    pub fn solve_from(&self, init: DVector<f64>, opts: &SolverOptions) -> Result<FixedPilotSolution> {
        if init.len() != self.num_interferers() {
            return Err(Error::dim("initial point has the wrong length"));
        }
        let report = iterate(init, |x| self.map(x), opts)?;
        if !report.converged {
            warn!("fixed-pilot system did not converge (residual {:.3e})", report.residual);
        }
        let effective_length = self.effective_length(&report.solution)?;
        let xi = mse_interference_free(&self.lam0, self.beta0, self.snr[0], effective_length, self.m);
        Ok(FixedPilotSolution { report, xi, effective_length })
    }
}

/// Solves the fixed-pilot system from `ι = 0`. With no interferers the
/// report is empty and `ξ` is the interference-free MSE at length `‖p₀‖²`.
pub fn solve_thm1(
    pilots: &PilotSet,
    cov0: &CovarianceProfile,
    params: &SystemParams,
    ranks: &[usize],
    opts: &SolverOptions,
) -> Result<FixedPilotSolution> {
    let sys = FixedPilotSystem::new(pilots, cov0, params, ranks)?;
    sys.solve_from(DVector::zeros(sys.num_interferers()), opts)
}
