//! Published numbers for the default large-system setting: τ = 1/4,
//! K = ⌊M/4⌋ − 1, α_L = 3/4, 15 dB.

use csi_deteq::deteq::{gamma_infinity, solve_gamma_scalar, Regime, RegimeThresholds, SolverOptions};
use csi_deteq::model::{derive_ratios, SystemParams};
use csi_deteq::mse::{jensen_upper_bound, mse_conventional, mse_interference_free};
use csi_deteq::pilotopt::{approx_min_length, limit_ratio, orthogonal_preferable, reduction_ratio};

fn db(x: f64) -> f64 {
    10f64.powf(x / 10.0)
}

#[test]
fn closed_form_length_at_128_antennas() {
    // K + 1 = 32 users, τ_0 = τ̄ = 1/4
    assert_eq!(approx_min_length(31, 0.25, 0.25), 16);
    assert_eq!(limit_ratio(0.25, 0.25), 2.0);
    assert_eq!(reduction_ratio(31, 16), 2.0);
    assert!(!orthogonal_preferable(0.25, 0.25));
}

#[test]
fn orthogonal_pilots_win_when_ranks_are_large() {
    assert!(orthogonal_preferable(0.6, 0.5));
    assert!(limit_ratio(0.6, 0.5) < 1.0);
    // ⌈32·0.6 + 31·0.5⌉ exceeds K + 1
    assert_eq!(approx_min_length(31, 0.6, 0.5), 35);
}

#[test]
fn conventional_baseline_at_15_db() {
    let v = mse_conventional(1.0, db(15.0), 32);
    assert!((v - 1.0 / (1.0 + 32.0 * db(15.0))).abs() < 1e-18);
    assert!((v - 9.8724e-4).abs() < 1e-8);
}

#[test]
fn flat_spectrum_meets_jensen_bound() {
    // equal eigenvalues M/r make Jensen tight
    let (m, r) = (128, 32);
    let eigs = vec![m as f64 / r as f64; r];
    let free = mse_interference_free(&eigs, 1.0, db(15.0), 23.0, m);
    let bound = jensen_upper_bound(1.0, db(15.0), 23.0, m, r);
    assert!((free - bound).abs() <= 1e-15);
}

#[test]
fn gamma_approaches_pilot_contamination_limit() {
    // the limit τ̄/(α − τ̄) is 1/2 for α = 3/4
    for m in [512usize, 2048] {
        let k = m / 4 - 1;
        let l = (3 * k) / 4;
        let params = SystemParams::uniform(m, k, l, db(15.0), 1.0).unwrap();
        let ranks = vec![m / 4; k + 1];
        let ratios = derive_ratios(&params, &ranks).unwrap();
        let g = solve_gamma_scalar(ratios.interferer_taus(), &params.snr[1..], l, &SolverOptions::scalar()).unwrap();
        let gi = gamma_infinity(&ratios, &params.snr[1..], l, RegimeThresholds::default()).unwrap();
        assert_eq!(gi.regime, Regime::PilotContaminated);
        let lim = gi.gamma_inf.unwrap();
        let alpha = l as f64 / k as f64;
        assert!((lim - 0.25 / (alpha - 0.25)).abs() < 1e-12);
        assert!((g.solution - lim).abs() / lim < 0.05, "M={m}: {} vs {lim}", g.solution);
    }
}
