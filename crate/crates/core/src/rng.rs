//! Reproducible random streams.
//!
//! Every random quantity is drawn from a ChaCha stream whose 256-bit key is
//! the SHA-256 digest of a path of integers, typically
//! `(master seed, point, trial, role, user)`. Streams are therefore
//! independent of evaluation order and thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use sha2::{Digest, Sha256};

use crate::linalg::{C64, CMatrix};

pub type StreamRng = ChaCha8Rng;

/// What a stream is used for; part of the key path.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Role {
    Covariance = 1,
    Pilot = 2,
    Channel = 3,
    Noise = 4,
    Azimuth = 5,
}

/// Builds the stream keyed by `seed` followed by `path`.
pub fn stream(seed: u64, path: &[u64]) -> StreamRng {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update((path.len() as u64).to_le_bytes());
    for p in path {
        h.update(p.to_le_bytes());
    }
    let key: [u8; 32] = h.finalize().into();
    ChaCha8Rng::from_seed(key)
}

/// Circularly-symmetric complex Gaussian with unit variance.
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let a: f64 = rng.sample(StandardNormal);
    let b: f64 = rng.sample(StandardNormal);
    C64::new(a, b) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn complex_normal_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    // column-major fill keeps the draw order independent of nalgebra internals
    let mut m = CMatrix::zeros(rows, cols);
    for j in 0..cols {
        for i in 0..rows {
            m[(i, j)] = complex_normal(rng);
        }
    }
    m
}

/// Uniform phase in `[0, 2π)` as a unit-modulus complex number.
pub fn unit_phase<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let psi: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    C64::from_polar(1.0, psi)
}
