//! Generic damped fixed-point iteration.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, C64};

/// Iteration state: anything with a norm and an affine combination.
pub trait FixedPointState: Clone {
    fn distance(&self, other: &Self) -> f64;
    fn norm(&self) -> f64;
    /// `(1 − w)·self + w·next`.
    fn relax(&self, next: &Self, w: f64) -> Self;
}

impl FixedPointState for f64 {
    fn distance(&self, other: &Self) -> f64 {
        (self - other).abs()
    }
    fn norm(&self) -> f64 {
        self.abs()
    }
    fn relax(&self, next: &Self, w: f64) -> Self {
        (1.0 - w) * self + w * next
    }
}

impl FixedPointState for DVector<f64> {
    fn distance(&self, other: &Self) -> f64 {
        (self - other).norm()
    }
    fn norm(&self) -> f64 {
        DVector::norm(self)
    }
    fn relax(&self, next: &Self, w: f64) -> Self {
        self * (1.0 - w) + next * w
    }
}

impl FixedPointState for CMatrix {
    fn distance(&self, other: &Self) -> f64 {
        (self - other).norm()
    }
    fn norm(&self) -> f64 {
        CMatrix::norm(self)
    }
    fn relax(&self, next: &Self, w: f64) -> Self {
        self * C64::new(1.0 - w, 0.0) + next * C64::new(w, 0.0)
    }
}

/// `‖next − prev‖ / ‖next‖`, zero when both vanish.
pub fn relative_residual<T: FixedPointState>(prev: &T, next: &T) -> f64 {
    let d = prev.distance(next);
    if d == 0.0 {
        return 0.0;
    }
    let n = next.norm();
    if n == 0.0 {
        f64::INFINITY
    } else {
        d / n
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iters: usize,
    /// Initial relaxation weight in `(0, 1]`.
    pub damping: f64,
    /// Halve the damping (down to 1/4) after the update norm grows on three
    /// consecutive steps.
    pub adaptive_damping: bool,
}

impl SolverOptions {
    pub const SCALAR_TOL: f64 = 1e-12;
    pub const MATRIX_TOL: f64 = 1e-10;

    /// Defaults for scalar and vector unknowns.
    pub fn scalar() -> Self {
        Self { tol: Self::SCALAR_TOL, max_iters: 10_000, damping: 1.0, adaptive_damping: true }
    }

    /// Defaults for matrix unknowns.
    pub fn matrix() -> Self {
        Self { tol: Self::MATRIX_TOL, ..Self::scalar() }
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::domain("solver tolerance must be positive"));
        }
        if self.max_iters == 0 {
            return Err(Error::domain("max_iters must be at least 1"));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::domain("damping must lie in (0, 1]"));
        }
        Ok(())
    }
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self::scalar()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedPointReport<T> {
    pub solution: T,
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
    pub damping_used: f64,
}

impl<T> FixedPointReport<T> {
    /// Fails with a numerical error when the iteration did not converge.
    pub fn require_converged(self, what: &str) -> Result<Self> {
        if self.converged {
            Ok(self)
        } else {
            Err(Error::Numerical(format!(
                "{what} did not converge after {} iterations (residual {:.3e})",
                self.iterations, self.residual
            )))
        }
    }
}

/// Iterates `x ← (1−w)x + w·map(x)` until `‖map(x) − x‖/‖map(x)‖ ≤ tol`
/// and, when the observed step ratio `q` is below one, the distance to the
/// fixed point estimated as `q/(1−q)` times the residual is also within
/// `tol`. The reported solution is the last map image.
pub fn iterate<T, F>(init: T, mut map: F, opts: &SolverOptions) -> Result<FixedPointReport<T>>
where
    T: FixedPointState,
    F: FnMut(&T) -> Result<T>,
{
    opts.validate()?;
    let mut x = init;
    let mut w = opts.damping;
    let mut prev = f64::INFINITY;
    let mut rising = 0;
    let mut residual = f64::INFINITY;
    for it in 1..=opts.max_iters {
        let fx = map(&x)?;
        let step = x.distance(&fx);
        residual = relative_residual(&x, &fx);
        if !residual.is_finite() && fx.norm().is_nan() {
            return Err(Error::Numerical(format!("fixed-point map produced NaN at iteration {it}")));
        }
        let q = step / prev;
        let settled = q >= 1.0 || residual * q / (1.0 - q) <= opts.tol || residual <= 16.0 * f64::EPSILON;
        if residual <= opts.tol && settled {
            return Ok(FixedPointReport { solution: fx, iterations: it, residual, converged: true, damping_used: w });
        }
        rising = if step > prev { rising + 1 } else { 0 };
        if opts.adaptive_damping && rising >= 3 && w > 0.25 {
            w = (w * 0.5).max(0.25);
            rising = 0;
        }
        prev = step;
        x = x.relax(&fx, w);
    }
    Ok(FixedPointReport { solution: x, iterations: opts.max_iters, residual, converged: false, damping_used: w })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn converges_on_contraction() {
        let r = iterate(0.0, |x: &f64| Ok(0.5 * x + 1.0), &SolverOptions::scalar()).unwrap();
        assert!(r.converged);
        assert!((r.solution - 2.0).abs() < 1e-11);
        assert!(r.residual <= 1e-12);
    }

    #[test]
    fn slow_contraction_is_accurate_to_tolerance() {
        // residual alone would stop about 99 tolerances away from 1
        let r = iterate(0.0, |x: &f64| Ok(0.99 * x + 0.01), &SolverOptions::scalar()).unwrap();
        assert!(r.converged);
        assert!((r.solution - 1.0).abs() <= 2e-12, "{}", r.solution);
    }

    #[test]
    fn damping_rescues_oscillation() {
        // slope -1.5 diverges undamped, contracts at w = 1/2
        let r = iterate(0.0, |x: &f64| Ok(-1.5 * x + 5.0), &SolverOptions::scalar()).unwrap();
        assert!(r.converged);
        assert!(r.damping_used < 1.0);
        assert!((r.solution - 2.0).abs() < 1e-10);
    }

    #[test]
    fn reports_non_convergence() {
        let opts = SolverOptions { max_iters: 5, adaptive_damping: false, ..SolverOptions::scalar() };
        let r = iterate(1.0, |x: &f64| Ok(x + 1.0), &opts).unwrap();
        assert!(!r.converged);
        assert_eq!(r.iterations, 5);
        assert!(r.clone().require_converged("test").is_err());
    }

    #[test]
    fn zero_fixed_point_has_zero_residual() {
        let r = iterate(0.0, |_: &f64| Ok(0.0), &SolverOptions::scalar()).unwrap();
        assert!(r.converged);
        assert_eq!(r.iterations, 1);
        assert_eq!(r.residual, 0.0);
    }

    #[test]
    fn options_are_validated() {
        let bad = SolverOptions { damping: 0.0, ..SolverOptions::scalar() };
        assert!(iterate(0.0, |x: &f64| Ok(*x), &bad).is_err());
    }
}
