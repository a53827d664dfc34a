#![allow(dead_code)]

use csi_deteq::covgen::{gen_max_entropy, gen_one_ring_uca, CovarianceProfile};
use csi_deteq::model::SystemParams;
use csi_deteq::pilots::{gen_orthogonal, gen_random_phase, PilotSet};
use csi_deteq::{CMatrix, C64};
use rand::Rng;

pub fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Error covariance of user 0 from the explicit `ML × ML` observation
/// covariance `Σ_k ρ_k (p_k p_k†) ⊗ Σ_k + I`, inverted by LU.
pub fn oracle_error_cov(pilots: &PilotSet, covs: &[CovarianceProfile], params: &SystemParams) -> CMatrix {
    let m = params.num_antennas;
    let l = params.pilot_length;
    let p = &pilots.matrix;
    let mut cy = CMatrix::identity(m * l, m * l);
    for (k, cov) in covs.iter().enumerate() {
        let pk = p.column(k).into_owned();
        let outer = &pk * pk.adjoint();
        cy += outer.kronecker(&cov.sigma) * c(params.snr[k]);
    }
    let p0 = p.column(0).into_owned();
    let x = p0.kronecker(&CMatrix::identity(m, m)) * &covs[0].sigma;
    let inv = cy.try_inverse().expect("observation covariance is invertible");
    let ce = &covs[0].sigma - x.adjoint() * inv * &x * c(params.snr[0]);
    ce * c(params.pathloss[0])
}

pub fn oracle_mse(pilots: &PilotSet, covs: &[CovarianceProfile], params: &SystemParams) -> f64 {
    oracle_error_cov(pilots, covs, params).trace().re / params.num_antennas as f64
}

/// `(1/M) Σ β₀λ/(1+Lρ₀λ)` written out independently of the library.
pub fn closed_form_free(eigs: &[f64], beta0: f64, rho0: f64, l: f64, m: usize) -> f64 {
    let mut s = 0.0;
    for &lam in eigs {
        s += beta0 * lam / (1.0 + l * rho0 * lam);
    }
    s / m as f64
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

pub struct Instance {
    pub params: SystemParams,
    pub covs: Vec<CovarianceProfile>,
    pub pilots: PilotSet,
}

/// A small instance with mixed covariance and pilot models.
pub fn small_instance<R: Rng>(rng: &mut R, max_m: usize, max_k: usize, max_l: usize) -> Instance {
    let m = rng.random_range(2..=max_m);
    let k = rng.random_range(0..=max_k);
    let l = rng.random_range(1..=max_l);
    let snr: Vec<f64> = (0..=k).map(|_| 10f64.powf(rng.random_range(-1.0..2.0))).collect();
    let pathloss: Vec<f64> = (0..=k).map(|_| rng.random_range(0.2..2.0)).collect();
    let params = SystemParams::new(m, k, l, snr, pathloss).unwrap();
    let covs = (0..=k)
        .map(|_| {
            if rng.random_bool(0.5) {
                let r = rng.random_range(1..=m);
                gen_max_entropy(m, r, rng).unwrap()
            } else {
                let spread = rng.random_range(5f64..40.0).to_radians();
                gen_one_ring_uca(m, None, spread, 64, rng).unwrap()
            }
        })
        .collect();
    let pilots = if l > k && rng.random_bool(0.3) {
        gen_orthogonal(l, k + 1).unwrap()
    } else {
        gen_random_phase(l, k + 1, rng)
    };
    Instance { params, covs, pilots }
}
