//! Exact and large-system channel-estimation MSE for covariance-aided
//! multi-user CSI acquisition in massive MIMO.
//!
//! The crate is organised bottom-up:
//!
//! * [`model`]: system parameters, asymptotic ratios, identifiability checks.
//! * [`covgen`]: spatial covariance generators (maximum entropy, one-ring UCA).
//! * [`pilots`]: orthogonal (DFT) and random-phase pilot matrices.
//! * [`mse`]: exact error covariances, MSE, per-mode SINR and a Monte Carlo
//!   estimator simulator.
//! * [`deteq`]: deterministic equivalents: the three fixed-point systems, the
//!   block-trace operator and hypothesis diagnostics.
//! * [`pilotopt`]: minimum pilot length search and its closed-form estimate.
//! * [`harness`]: seeded experiment sweeps with CSV output.
//!
//! ```
//! use csi_deteq::{mse, pilots, covgen, model::SystemParams};
//! use csi_deteq::rng::stream;
//!
//! let mut rng = stream(7, &[0]);
//! let params = SystemParams::uniform(16, 2, 4, 10.0, 1.0).unwrap();
//! let covs: Vec<_> = (0..3)
//!     .map(|_| covgen::gen_max_entropy(16, 4, &mut rng).unwrap())
//!     .collect();
//! let p = pilots::gen_random_phase(4, 3, &mut rng);
//! let exact = mse::mse_cov_aided_exact(&p, &covs, &params).unwrap();
//! assert!(exact.total_mse <= 1.0);
//! ```

pub mod covgen;
pub mod deteq;
pub mod error;
pub mod harness;
pub mod io;
pub mod linalg;
pub mod model;
pub mod mse;
pub mod pilotopt;
pub mod pilots;
pub mod quadrature;
pub mod rng;

pub use error::{Error, Result};
pub use linalg::{CMatrix, CVector, C64};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/system-model.md")]
    mod system_model {}
    #[doc = include_str!("../../../book/src/exact-mse.md")]
    mod exact_mse {}
    #[doc = include_str!("../../../book/src/block-trace.md")]
    mod block_trace {}
    #[doc = include_str!("../../../book/src/deterministic-equivalents.md")]
    mod deterministic_equivalents {}
    #[doc = include_str!("../../../book/src/pilot-length.md")]
    mod pilot_length {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
}
