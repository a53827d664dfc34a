//! Deterministic equivalents of the covariance-aided MSE.
//!
//! Three fixed-point systems are provided: one for fixed pilots with
//! randomly oriented covariance subspaces, a matrix system for fixed
//! covariances with random pilots, and a scalar system when both are random.

mod diagnostics;
mod fixed_pilot;
mod fixed_point;
mod gamma_matrix;
mod scalar;

pub use diagnostics::{
    block_quadratic, block_trace, check_prop1, compute_a_l, trace_lemma_probe, ProbeStats, Prop1Diagnostics,
    DENSE_A_L_LIMIT,
};
pub use fixed_pilot::{solve_thm1, FixedPilotSolution, FixedPilotSystem};
pub use fixed_point::{iterate, relative_residual, FixedPointReport, FixedPointState, SolverOptions};
pub use gamma_matrix::{solve_thm3, xi_thm3, GammaMatrixSystem};
pub use scalar::{
    gamma_infinity, gamma_sandwich_holds, solve_gamma_scalar, xi_thm4, GammaInfinity, GammaScalarSystem, Regime,
    RegimeThresholds,
};
