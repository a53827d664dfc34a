//! JSON experiment configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::covgen::DEFAULT_QUADRATURE_NODES;
use crate::deteq::{RegimeThresholds, SolverOptions};
use crate::error::{Error, Result};
use crate::pilots::PilotModel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Sweep {
    Antennas(Vec<usize>),
    PilotLengths(Vec<usize>),
    SnrDb(Vec<f64>),
}

impl Sweep {
    pub fn len(&self) -> usize {
        match self {
            Sweep::Antennas(v) | Sweep::PilotLengths(v) => v.len(),
            Sweep::SnrDb(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum InterfererRule {
    Fixed(usize),
    /// `⌊M/4⌋ − 1`.
    QuarterMinusOne,
}

impl InterfererRule {
    pub fn resolve(self, m: usize) -> usize {
        match self {
            InterfererRule::Fixed(k) => k,
            InterfererRule::QuarterMinusOne => (m / 4).saturating_sub(1),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum PilotLengthRule {
    Fixed(usize),
    /// `max(1, ⌊αK⌋)`.
    Alpha(f64),
    /// `max(1, ⌊K/4⌋)`.
    QuarterOfK,
    /// Minimum length found by exhaustive search, per realization.
    Search,
}

impl PilotLengthRule {
    /// `None` for the search rule.
    pub fn resolve(self, k: usize) -> Option<usize> {
        match self {
            PilotLengthRule::Fixed(l) => Some(l),
            // small offset keeps exact products such as 0.75·8 from flooring down
            PilotLengthRule::Alpha(a) => Some(((a * k as f64 + 1e-9).floor() as usize).max(1)),
            PilotLengthRule::QuarterOfK => Some((k / 4).max(1)),
            PilotLengthRule::Search => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case", deny_unknown_fields)]
pub enum CovarianceSpec {
    /// Rank `round(τM)` (at least one).
    MaxEntropy { tau: f64 },
    OneRingUca {
        spread_deg: f64,
        #[serde(default = "default_nodes")]
        nodes: usize,
    },
}

fn default_nodes() -> usize {
    DEFAULT_QUADRATURE_NODES
}

impl CovarianceSpec {
    pub fn tag(&self) -> &'static str {
        match self {
            CovarianceSpec::MaxEntropy { .. } => "max_entropy",
            CovarianceSpec::OneRingUca { .. } => "one_ring_uca",
        }
    }

    pub fn rank(tau: f64, m: usize) -> usize {
        ((tau * m as f64).round() as usize).clamp(1, m)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SnrSpec {
    Uniform(f64),
    /// One value per user `0..=K`.
    PerUser(Vec<f64>),
    /// `ρ₀ = 10^{db/10}`, `ρ_k = ρ₀ k^{-exponent}`.
    Decaying { db: f64, exponent: f64 },
}

impl SnrSpec {
    /// Linear SNRs for `n` users.
    pub fn resolve(&self, n: usize) -> Result<Vec<f64>> {
        let lin = |db: f64| 10f64.powf(db / 10.0);
        match self {
            SnrSpec::Uniform(db) => Ok(vec![lin(*db); n]),
            SnrSpec::PerUser(v) if v.len() == n => Ok(v.iter().map(|&d| lin(d)).collect()),
            SnrSpec::PerUser(v) => Err(Error::Config(format!("snr_db lists {} users, the point has {n}", v.len()))),
            SnrSpec::Decaying { db, exponent } => {
                let r0 = lin(*db);
                Ok((0..n).map(|k| if k == 0 { r0 } else { r0 * (k as f64).powf(-exponent) }).collect())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum PathlossSpec {
    Uniform(f64),
    PerUser(Vec<f64>),
}

impl PathlossSpec {
    pub fn resolve(&self, n: usize) -> Result<Vec<f64>> {
        match self {
            PathlossSpec::Uniform(b) => Ok(vec![*b; n]),
            PathlossSpec::PerUser(v) if v.len() == n => Ok(v.clone()),
            PathlossSpec::PerUser(v) => {
                Err(Error::Config(format!("pathloss lists {} users, the point has {n}", v.len())))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Output {
    ExactMse,
    Thm1,
    Thm3,
    Thm4,
    Gamma,
    #[serde(rename = "A_L_lambda_min", alias = "a_l_lambda_min")]
    ALLambdaMin,
    Assumption3,
    RankStats,
    PilotLength,
}

fn default_pilots() -> PilotModel {
    PilotModel::RandomPhase
}

fn default_pathloss() -> PathlossSpec {
    PathlossSpec::Uniform(1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: String,
    pub sweep: Sweep,
    /// Antenna count when the sweep variable is not `antennas`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub antennas: Option<usize>,
    pub interferers: InterfererRule,
    pub pilot_length: PilotLengthRule,
    pub covariances: Vec<CovarianceSpec>,
    #[serde(default = "default_pilots")]
    pub pilots: PilotModel,
    pub snr_db: SnrSpec,
    #[serde(default = "default_pathloss")]
    pub pathloss: PathlossSpec,
    pub trials: usize,
    pub seed: u64,
    pub outputs: Vec<Output>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solver: Option<SolverOptions>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regime_thresholds: Option<RegimeThresholds>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Canonical one-line JSON used for hashing.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.sweep.is_empty() {
            return bad("sweep has no values".into());
        }
        if self.covariances.is_empty() {
            return bad("at least one covariance model is required".into());
        }
        if self.outputs.is_empty() {
            return bad("no outputs requested".into());
        }
        match &self.sweep {
            Sweep::Antennas(v) => {
                if v.contains(&0) {
                    return bad("antenna counts must be positive".into());
                }
            }
            Sweep::PilotLengths(v) => {
                if v.contains(&0) {
                    return bad("pilot lengths must be positive".into());
                }
                if self.pilot_length == PilotLengthRule::Search {
                    return bad("a pilot-length sweep cannot use the search rule".into());
                }
            }
            Sweep::SnrDb(v) => {
                if v.iter().any(|x| !x.is_finite()) {
                    return bad("SNR values must be finite".into());
                }
            }
        }
        if !matches!(self.sweep, Sweep::Antennas(_)) && !self.antennas.is_some_and(|m| m > 0) {
            return bad("`antennas` must be set when the sweep is not over antennas".into());
        }
        match self.pilot_length {
            PilotLengthRule::Fixed(0) => return bad("fixed pilot length must be positive".into()),
            PilotLengthRule::Alpha(a) if !(a > 0.0 && a.is_finite()) => {
                return bad(format!("alpha must be positive, got {a}"))
            }
            _ => {}
        }
        for c in &self.covariances {
            match c {
                CovarianceSpec::MaxEntropy { tau } if !(*tau > 0.0 && *tau <= 1.0) => {
                    return bad(format!("tau must lie in (0, 1], got {tau}"))
                }
                CovarianceSpec::OneRingUca { spread_deg, nodes } => {
                    if !(*spread_deg > 0.0 && spread_deg.is_finite()) {
                        return bad(format!("angular spread must be positive, got {spread_deg}"));
                    }
                    if *nodes < 16 {
                        return bad("one-ring quadrature needs at least 16 nodes".into());
                    }
                }
                _ => {}
            }
        }
        if self.pilots == PilotModel::Explicit {
            return bad("explicit pilots are not available in sweeps".into());
        }
        match &self.pathloss {
            PathlossSpec::Uniform(b) if !(*b > 0.0 && b.is_finite()) => {
                return bad("pathloss must be positive".into())
            }
            PathlossSpec::PerUser(v) if v.iter().any(|b| !(*b > 0.0 && b.is_finite())) => {
                return bad("pathloss values must be positive".into())
            }
            _ => {}
        }
        if let Some(s) = &self.solver {
            s.validate().map_err(|e| Error::Config(e.to_string()))?;
        }
        let wants_search = self.outputs.contains(&Output::PilotLength);
        if wants_search != (self.pilot_length == PilotLengthRule::Search) {
            return bad("the pilot_length output and the search rule must be used together".into());
        }
        if wants_search && self.outputs.iter().any(|o| !matches!(o, Output::PilotLength | Output::RankStats)) {
            return bad("with the search rule only pilot_length and rank_stats outputs are available".into());
        }
        if self.outputs.iter().any(|o| matches!(o, Output::Thm1 | Output::Thm3 | Output::Thm4))
            && !self.outputs.contains(&Output::ExactMse)
        {
            log::info!("deterministic equivalents requested without exact_mse: no normalized errors");
        }
        Ok(())
    }

    pub fn name_or_default(&self) -> &str {
        if self.name.is_empty() {
            "experiment"
        } else {
            &self.name
        }
    }

    /// Requested outputs, sorted and deduplicated.
    pub fn output_set(&self) -> Vec<Output> {
        let mut v = self.outputs.clone();
        v.sort();
        v.dedup();
        v
    }

    pub fn solver_scalar(&self) -> SolverOptions {
        self.solver.unwrap_or_else(SolverOptions::scalar)
    }

    /// Matrix solver options; a configured tolerance applies to both.
    pub fn solver_matrix(&self) -> SolverOptions {
        self.solver.unwrap_or_else(SolverOptions::matrix)
    }
}
