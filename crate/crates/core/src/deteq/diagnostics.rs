//! Block trace, the `A_L` diagnostic, the sufficient conditions for
//! `λ_min(A_L)` and the blockwise trace-lemma probe.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::covgen::CovarianceProfile;
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, C64};
use crate::model::{check_dims, subspace_gram, SystemParams};
use crate::mse::{Interference, SolvePath};
use crate::pilots::PilotSet;
use crate::rng::unit_phase;

/// Largest `ML` for which `A_L` is computed from the dense inverse.
pub const DENSE_A_L_LIMIT: usize = 1024;

/// Sum of the `L` diagonal `M × M` blocks of an `ML × ML` matrix.
pub fn block_trace(b: &CMatrix, m: usize) -> Result<CMatrix> {
    let n = b.nrows();
    if m == 0 || n != b.ncols() || n % m != 0 {
        return Err(Error::domain(format!("a {}x{} matrix has no {m}x{m} block trace", n, b.ncols())));
    }
    let mut out = CMatrix::zeros(m, m);
    for l in 0..n / m {
        out += b.view((l * m, l * m), (m, m));
    }
    Ok(out)
}

/// `A_L = (1/L) blktr[(Σ_k ρ_k P̃_kΣ_kP̃_k† + I)⁻¹]` over the interferers
/// `covs` (users `1..=K`), and its smallest eigenvalue.
pub fn compute_a_l(pilots: &PilotSet, covs: &[CovarianceProfile], params: &SystemParams) -> Result<(CMatrix, f64)> {
    let k = params.num_interferers;
    if covs.len() != k {
        return Err(Error::dim(format!("expected {k} interferer covariances, got {}", covs.len())));
    }
    if pilots.num_users() != k + 1 || pilots.length() != params.pilot_length {
        return Err(Error::dim("pilot matrix does not match the parameters"));
    }
    let m = params.num_antennas;
    let l = params.pilot_length;
    let interference = Interference::new(m, covs, &params.snr[1..])?;
    let path = if m * l <= DENSE_A_L_LIMIT { SolvePath::Dense } else { SolvePath::Reduced };
    let mut a = interference.resolvent_block_trace(pilots, path)? / C64::new(l as f64, 0.0);
    linalg::symmetrize(&mut a);
    let lmin = linalg::lambda_min(&a);
    Ok((a, lmin))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prop1Diagnostics {
    /// `Σ_{k=0..K} ρ_k`.
    pub snr_sum: f64,
    /// `max_k ‖Σ_k‖`.
    pub max_cov_norm: f64,
    /// `λ_min((1/(K+1)) U†P̃†P̃U)`.
    pub subspace_c: f64,
    pub b_satisfied: bool,
}

/// Statistics of the two sufficient conditions for a positive `λ_min(A_L)`:
/// summable SNRs and strong subspace identifiability.
pub fn check_prop1(pilots: &PilotSet, covs: &[CovarianceProfile], params: &SystemParams) -> Result<Prop1Diagnostics> {
    check_dims(params, pilots, covs)?;
    let n = params.num_users() as f64;
    let g = subspace_gram(pilots, covs) / C64::new(n, 0.0);
    let ev = linalg::hermitian_eigenvalues_desc(&g);
    let top = ev.first().copied().unwrap_or(0.0);
    let raw = ev.last().copied().unwrap_or(0.0);
    // eigenvalues at rounding level of a singular Gram count as zero
    let floor = top * g.nrows() as f64 * f64::EPSILON * 16.0;
    let c = if raw.abs() <= floor { 0.0 } else { raw };
    Ok(Prop1Diagnostics {
        snr_sum: params.snr.iter().sum(),
        max_cov_norm: covs.iter().map(CovarianceProfile::lambda_max).fold(0.0, f64::max),
        subspace_c: c,
        b_satisfied: c > 0.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeStats {
    pub mean: f64,
    pub max: f64,
    pub trials: usize,
}

/// `X† A X` for `X = x ⊗ I_M`.
pub fn block_quadratic(a: &CMatrix, x: &[C64], m: usize) -> CMatrix {
    let l = x.len();
    let mut out = CMatrix::zeros(m, m);
    for i in 0..l {
        for j in 0..l {
            let c = x[i].conj() * x[j];
            out.zip_apply(&a.view((i * m, j * m), (m, m)), |o, v| *o += c * v);
        }
    }
    out
}

/// Mean and maximum of `(1/L) ‖X†AX − blktr A‖` over `trials` draws of a
/// unit-modulus `x`.
pub fn trace_lemma_probe<R: Rng + ?Sized>(
    a: &CMatrix,
    m: usize,
    trials: usize,
    rng: &mut R,
) -> Result<ProbeStats> {
    if trials == 0 {
        return Err(Error::domain("at least one probe trial is required"));
    }
    let bt = block_trace(a, m)?;
    let l = a.nrows() / m;
    let mut devs = Vec::with_capacity(trials);
    for _ in 0..trials {
        let x: Vec<C64> = (0..l).map(|_| unit_phase(rng)).collect();
        let d = block_quadratic(a, &x, m) - &bt;
        devs.push(linalg::hermitian_norm(&d) / l as f64);
    }
    let (mean, _) = linalg::mean_and_stderr(&devs);
    Ok(ProbeStats { mean, max: devs.iter().copied().fold(0.0, f64::max), trials })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covgen::gen_max_entropy;
    use crate::pilots::{gen_orthogonal, gen_random_phase};
    use crate::rng::{complex_normal_matrix, stream};

    #[test]
    fn block_trace_identities() {
        let mut rng = stream(31, &[]);
        let eye = CMatrix::identity(12, 12);
        let bt = block_trace(&eye, 4).unwrap();
        assert!((bt - CMatrix::identity(4, 4) * C64::new(3.0, 0.0)).camax() < 1e-15);
        let a = complex_normal_matrix(3, 3, &mut rng);
        let c = complex_normal_matrix(4, 4, &mut rng);
        let bt = block_trace(&linalg::kron(&a, &c), 4).unwrap();
        assert!((bt - &c * a.trace()).camax() < 1e-12);
        let b = complex_normal_matrix(12, 12, &mut rng);
        assert!((block_trace(&b, 4).unwrap().trace() - b.trace()).norm() < 1e-12);
        assert!(block_trace(&b, 5).is_err());
    }

    #[test]
    fn a_l_without_interference_is_identity() {
        let params = SystemParams::uniform(6, 0, 3, 1.0, 1.0).unwrap();
        let p = gen_orthogonal(3, 1).unwrap();
        let (a, lmin) = compute_a_l(&p, &[], &params).unwrap();
        assert!((a - CMatrix::identity(6, 6)).camax() < 1e-15);
        assert!((lmin - 1.0).abs() < 1e-15);
    }

    #[test]
    fn a_l_paths_agree_and_are_below_identity() {
        let mut rng = stream(32, &[]);
        let covs: Vec<_> = (0..3).map(|_| gen_max_entropy(8, 3, &mut rng).unwrap()).collect();
        let p = gen_random_phase(4, 4, &mut rng);
        let params = SystemParams::uniform(8, 3, 4, 5.0, 1.0).unwrap();
        let (a, lmin) = compute_a_l(&p, &covs, &params).unwrap();
        let inter = Interference::new(8, &covs, &params.snr[1..]).unwrap();
        let reduced = inter.resolvent_block_trace(&p, SolvePath::Reduced).unwrap() / C64::new(4.0, 0.0);
        assert!(linalg::rel_frobenius(&reduced, &a) < 1e-12);
        assert!(lmin > 0.0);
        assert!(linalg::lambda_max(&a) <= 1.0 + 1e-12);
    }

    #[test]
    fn prop1_orthogonal_and_repeated() {
        let mut rng = stream(33, &[]);
        let covs: Vec<_> = (0..3).map(|_| gen_max_entropy(8, 2, &mut rng).unwrap()).collect();
        let params = SystemParams::uniform(8, 2, 3, 2.0, 1.0).unwrap();
        let p = gen_orthogonal(3, 3).unwrap();
        let d = check_prop1(&p, &covs, &params).unwrap();
        assert!((d.subspace_c - 1.0).abs() < 1e-12);
        assert!((d.snr_sum - 6.0).abs() < 1e-15);

        let same = vec![covs[0].clone(), covs[0].clone(), covs[1].clone()];
        let mut m = gen_random_phase(3, 3, &mut rng).matrix;
        let c0 = m.column(0).into_owned();
        m.set_column(1, &c0);
        let d = check_prop1(&PilotSet::explicit(m), &same, &params).unwrap();
        assert_eq!(d.subspace_c, 0.0);
        assert!(!d.b_satisfied);
    }

    #[test]
    fn probe_is_exact_for_identity() {
        let mut rng = stream(34, &[]);
        let s = trace_lemma_probe(&CMatrix::identity(20, 20), 4, 10, &mut rng).unwrap();
        assert!(s.max < 1e-14);
    }

    #[test]
    fn probe_matches_all_ones_closed_form() {
        let (l, m) = (5, 3);
        let j = CMatrix::from_element(l, l, C64::new(1.0 / l as f64, 0.0));
        let a = linalg::kron(&j, &CMatrix::identity(m, m));
        let mut rng = stream(35, &[]);
        let x: Vec<C64> = (0..l).map(|_| unit_phase(&mut rng)).collect();
        let d = block_quadratic(&a, &x, m) - block_trace(&a, m).unwrap();
        let s: C64 = x.iter().sum();
        let closed = (s.norm_sqr() / l as f64 - 1.0).abs() / l as f64;
        assert!((linalg::hermitian_norm(&d) / l as f64 - closed).abs() < 1e-14);
    }
}
