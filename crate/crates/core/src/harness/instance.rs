//! Single-instance configuration used by the `mse`, `deteq` and
//! `pilot-length` commands.

use std::path::{Path, PathBuf};

use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::config::{CovarianceSpec, PathlossSpec, SnrSpec};
use crate::covgen::{gen_max_entropy, gen_one_ring_uca, CovarianceProfile};
use crate::deteq::{
    check_prop1, compute_a_l, gamma_infinity, solve_gamma_scalar, solve_thm1, solve_thm3, xi_thm3, xi_thm4,
    RegimeThresholds, SolverOptions,
};
use crate::error::{Error, Result};
use crate::io::{read_covariance, read_pilots};
use crate::linalg::{self, mean_and_stderr};
use crate::model::{check_identifiability, derive_ratios, SystemParams};
use crate::mse::{jensen_upper_bound, mse_conventional, mse_cov_aided_exact, mse_interference_free, mse_sinr_form};
use crate::pilotopt::{search_min_length, SearchOptions};
use crate::pilots::{gen_orthogonal, gen_random_phase, PilotModel, PilotSet};
use crate::rng::{stream, Role};

fn default_pilots() -> PilotModel {
    PilotModel::RandomPhase
}

fn default_pathloss() -> PathlossSpec {
    PathlossSpec::Uniform(1.0)
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceConfig {
    pub antennas: usize,
    pub interferers: usize,
    /// Ignored by the pilot-length search.
    #[serde(default = "one")]
    pub pilot_length: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub covariance: Option<CovarianceSpec>,
    /// Dense covariance files for users `0..=K`, instead of `covariance`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub covariance_files: Option<Vec<PathBuf>>,
    #[serde(default = "default_pilots")]
    pub pilots: PilotModel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pilot_file: Option<PathBuf>,
    pub snr_db: SnrSpec,
    #[serde(default = "default_pathloss")]
    pub pathloss: PathlossSpec,
    #[serde(default)]
    pub seed: u64,
    /// Covariance draws for the pilot-length search.
    #[serde(default = "one")]
    pub realizations: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solver: Option<SolverOptions>,
}

/// A concrete instance: parameters, covariances and pilots.
#[derive(Debug, Clone)]
pub struct Instance {
    pub params: SystemParams,
    pub covs: Vec<CovarianceProfile>,
    pub pilots: PilotSet,
}

impl InstanceConfig {
    pub fn from_json(text: &str, base: Option<&Path>) -> Result<Self> {
        let mut cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        if let Some(dir) = base {
            if let Some(files) = &mut cfg.covariance_files {
                for f in files.iter_mut() {
                    if f.is_relative() {
                        *f = dir.join(&*f);
                    }
                }
            }
            if let Some(f) = &mut cfg.pilot_file {
                if f.is_relative() {
                    *f = dir.join(&*f);
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Relative file paths are resolved against the config's directory.
    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?, path.parent())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.antennas == 0 || self.pilot_length == 0 {
            return bad("antennas and pilot_length must be positive");
        }
        if self.covariance.is_some() == self.covariance_files.is_some() {
            return bad("give exactly one of `covariance` and `covariance_files`");
        }
        if let Some(files) = &self.covariance_files {
            if files.len() != self.interferers + 1 {
                return bad("covariance_files needs one file per user");
            }
        }
        if self.pilots == PilotModel::Explicit && self.pilot_file.is_none() {
            return bad("explicit pilots need `pilot_file`");
        }
        if self.realizations == 0 {
            return bad("realizations must be at least 1");
        }
        Ok(())
    }

    fn params(&self, l: usize) -> Result<SystemParams> {
        let n = self.interferers + 1;
        SystemParams::new(self.antennas, self.interferers, l, self.snr_db.resolve(n)?, self.pathloss.resolve(n)?)
            .map_err(|e| Error::Config(e.to_string()))
    }

    fn covariances(&self, realization: usize) -> Result<Vec<CovarianceProfile>> {
        if let Some(files) = &self.covariance_files {
            return files.iter().map(|f| read_covariance(f)).collect();
        }
        let spec = self.covariance.as_ref().expect("validated");
        let m = self.antennas;
        (0..=self.interferers)
            .map(|user| {
                let mut rng = stream(self.seed, &[0, realization as u64, Role::Covariance as u64, user as u64]);
                match spec {
                    CovarianceSpec::MaxEntropy { tau } => gen_max_entropy(m, CovarianceSpec::rank(*tau, m), &mut rng),
                    CovarianceSpec::OneRingUca { spread_deg, nodes } => {
                        gen_one_ring_uca(m, None, spread_deg.to_radians(), *nodes, &mut rng)
                    }
                }
            })
            .collect()
    }

    pub fn build(&self) -> Result<Instance> {
        let params = self.params(self.pilot_length)?;
        let covs = self.covariances(0)?;
        let n = params.num_users();
        let pilots = match (&self.pilot_file, self.pilots) {
            (Some(f), _) => read_pilots(f)?,
            (None, PilotModel::OrthogonalDft) => gen_orthogonal(self.pilot_length, n)?,
            (None, _) => {
                gen_random_phase(self.pilot_length, n, &mut stream(self.seed, &[0, 0, Role::Pilot as u64]))
            }
        };
        if pilots.length() != self.pilot_length || pilots.num_users() != n {
            return Err(Error::Config(format!(
                "pilot matrix is {}x{}, expected {}x{n}",
                pilots.length(),
                pilots.num_users(),
                self.pilot_length
            )));
        }
        Ok(Instance { params, covs, pilots })
    }
}

/// Exact MSE, closed forms and identifiability of one instance.
pub fn evaluate_mse(cfg: &InstanceConfig) -> Result<Value> {
    let inst = cfg.build()?;
    let p = &inst.params;
    let (m, l) = (p.num_antennas, p.pilot_length);
    let (beta0, rho0) = (p.pathloss[0], p.snr[0]);
    let cov0 = &inst.covs[0];
    let e = mse_cov_aided_exact(&inst.pilots, &inst.covs, p)?;
    let ident = check_identifiability(p, &inst.pilots, &inst.covs)?;
    Ok(json!({
        "M": m, "K": p.num_interferers, "L": l,
        "mse_exact": e.total_mse,
        "mse_sinr_form": mse_sinr_form(&cov0.eigenvalues, &e.per_mode_sinr, beta0, m),
        "mse_conventional_same_length": mse_conventional(beta0, rho0, l),
        "mse_conventional_orthogonal": mse_conventional(beta0, rho0, p.num_users()),
        "mse_interference_free": mse_interference_free(&cov0.eigenvalues, beta0, rho0, l as f64, m),
        "jensen_upper_bound": jensen_upper_bound(beta0, rho0, l as f64, m, cov0.rank()),
        "per_mode_sinr": e.per_mode_sinr,
        "per_mode_contribution": e.per_mode_contribution,
        "identifiability": ident,
    }))
}

/// All deterministic equivalents and diagnostics of one instance. The
/// second value counts non-converged solvers.
pub fn evaluate_deteq(cfg: &InstanceConfig) -> Result<(Value, usize)> {
    let inst = cfg.build()?;
    let p = &inst.params;
    let (m, l) = (p.num_antennas, p.pilot_length);
    let (beta0, rho0) = (p.pathloss[0], p.snr[0]);
    let scalar = cfg.solver.unwrap_or_else(SolverOptions::scalar);
    let matrix = cfg.solver.unwrap_or_else(SolverOptions::matrix);
    let ranks: Vec<usize> = inst.covs.iter().map(CovarianceProfile::rank).collect();
    let ratios = derive_ratios(p, &ranks)?;

    let t1 = solve_thm1(&inst.pilots, &inst.covs[0], p, &ranks[1..], &scalar)?;
    let t3 = solve_thm3(&inst.covs[1..], p, &matrix)?;
    let xi3 = xi_thm3(&t3.solution, &inst.covs[0], p)?;
    let g = solve_gamma_scalar(ratios.interferer_taus(), &p.snr[1..], l, &scalar)?;
    let gi = gamma_infinity(&ratios, &p.snr[1..], l, RegimeThresholds::default())?;
    let (_, a_min) = compute_a_l(&inst.pilots, &inst.covs[1..], p)?;
    let prop1 = check_prop1(&inst.pilots, &inst.covs, p)?;
    let exact = mse_cov_aided_exact(&inst.pilots, &inst.covs, p)?.total_mse;
    let failures = [t1.report.converged, t3.converged, g.converged].iter().filter(|c| !**c).count();
    let value = json!({
        "M": m, "K": p.num_interferers, "L": l,
        "mse_exact": exact,
        "thm1": {
            "xi": t1.xi, "iota": t1.report.solution.as_slice(), "iterations": t1.report.iterations,
            "residual": t1.report.residual, "converged": t1.report.converged,
            "damping_used": t1.report.damping_used,
        },
        "thm3": {
            "xi": xi3, "gamma_lambda_min": linalg::lambda_min(&t3.solution), "iterations": t3.iterations,
            "residual": t3.residual, "converged": t3.converged, "damping_used": t3.damping_used,
        },
        "thm4": {
            "xi": xi_thm4(&inst.covs[0].eigenvalues, beta0, rho0, l, g.solution, m),
            "gamma": g.solution, "iterations": g.iterations, "residual": g.residual,
            "converged": g.converged, "damping_used": g.damping_used,
        },
        "gamma_infinity": gi,
        "ratios": ratios,
        "A_L_lambda_min": a_min,
        "prop1": prop1,
    });
    Ok((value, failures))
}

/// Pilot-length search over `realizations` covariance draws.
pub fn evaluate_pilot_length(cfg: &InstanceConfig) -> Result<Value> {
    let params = cfg.params(1)?;
    let results: Vec<_> = (0..cfg.realizations)
        .into_par_iter()
        .map(|r| -> Result<_> {
            let covs = cfg.covariances(r)?;
            let seed = stream(cfg.seed, &[0, r as u64, Role::Pilot as u64]).next_u64();
            search_min_length(&covs, &params, seed, &SearchOptions::default())
        })
        .collect::<Result<_>>()?;
    let l_star: Vec<f64> = results.iter().map(|r| r.l_star as f64).collect();
    let delta: Vec<f64> = results.iter().map(|r| r.delta).collect();
    let (l_mean, l_se) = mean_and_stderr(&l_star);
    let (d_mean, d_se) = mean_and_stderr(&delta);
    Ok(json!({
        "M": cfg.antennas, "K": cfg.interferers,
        "mean_l_star": l_mean, "mean_l_star_se": l_se,
        "mean_delta": d_mean, "mean_delta_se": d_se,
        "realizations": results,
    }))
}
