//! Pilot matrices `P = (p_0, …, p_K)` of size `L × (K+1)`.

use std::f64::consts::TAU;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, C64};
use crate::rng::unit_phase;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PilotModel {
    OrthogonalDft,
    RandomPhase,
    Explicit,
}

impl PilotModel {
    pub fn tag(self) -> &'static str {
        match self {
            PilotModel::OrthogonalDft => "orthogonal_dft",
            PilotModel::RandomPhase => "random_phase",
            PilotModel::Explicit => "explicit",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        match tag {
            "orthogonal_dft" => Some(PilotModel::OrthogonalDft),
            "random_phase" => Some(PilotModel::RandomPhase),
            "explicit" => Some(PilotModel::Explicit),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PilotSet {
    /// Column `k` is the pilot of user `k`.
    pub matrix: CMatrix,
    pub model: PilotModel,
    pub seed: Option<u64>,
}

impl PilotSet {
    pub fn explicit(matrix: CMatrix) -> Self {
        Self { matrix, model: PilotModel::Explicit, seed: None }
    }

    pub fn length(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn num_users(&self) -> usize {
        self.matrix.ncols()
    }

    /// `P† P`.
    pub fn gram(&self) -> CMatrix {
        self.matrix.adjoint() * &self.matrix
    }

    /// `(1/L) Σ_ℓ |p_k(ℓ)|²` for every column.
    pub fn column_powers(&self) -> Vec<f64> {
        let l = self.length() as f64;
        self.matrix.column_iter().map(|c| c.norm_squared() / l).collect()
    }
}

/// Distinct DFT columns `p_k(ℓ) = exp(j2πkℓ/L)`; `P†P = L·I`.
pub fn gen_orthogonal(l: usize, num_users: usize) -> Result<PilotSet> {
    if l < num_users {
        return Err(Error::domain(format!(
            "orthogonal pilots need L >= number of users ({l} < {num_users})"
        )));
    }
    let matrix = CMatrix::from_fn(l, num_users, |ell, k| {
        // reduce kℓ mod L before scaling to keep the phase argument small
        let idx = (k * ell) % l;
        C64::from_polar(1.0, TAU * idx as f64 / l as f64)
    });
    Ok(PilotSet { matrix, model: PilotModel::OrthogonalDft, seed: None })
}

/// I.i.d. unit-modulus entries `exp(jψ)`, `ψ ~ U[0, 2π)`, drawn column by column.
pub fn gen_random_phase<R: Rng + ?Sized>(l: usize, num_users: usize, rng: &mut R) -> PilotSet {
    let mut matrix = CMatrix::zeros(l, num_users);
    for k in 0..num_users {
        for ell in 0..l {
            matrix[(ell, k)] = unit_phase(rng);
        }
    }
    PilotSet { matrix, model: PilotModel::RandomPhase, seed: None }
}

/// [`gen_random_phase`] from a dedicated stream, recording the seed.
pub fn gen_random_phase_seeded(l: usize, num_users: usize, seed: u64) -> PilotSet {
    let mut rng = crate::rng::stream(seed, &[crate::rng::Role::Pilot as u64]);
    let mut p = gen_random_phase(l, num_users, &mut rng);
    p.seed = Some(seed);
    p
}
