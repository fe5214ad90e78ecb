//! Reproducible random-number plumbing.
//!
//! Every trajectory owns a ChaCha8 stream seeded from
//! `(base_seed, trajectory index)` through a SplitMix64 mix, so ensembles
//! are independent of execution order and worker count. Gaussian increments
//! come from a plain Box–Muller transform of the stream's uniform draws —
//! a fixed, fully specified mapping from the integer stream to floats, so a
//! record is reproducible from its seed alone.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// SplitMix64 step; the standard 64-bit finalizer.
pub fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic per-trajectory seed: mixes the base seed and the index so
/// neighboring indices share no low-bit structure.
pub fn trajectory_seed(base_seed: u64, index: u64) -> u64 {
    let mut s = base_seed ^ 0xD6E8_FEB8_6659_FD93;
    let a = splitmix64(&mut s);
    let mut s2 = a ^ index.wrapping_mul(0xA076_1D64_78BD_642F);
    splitmix64(&mut s2)
}

/// Gaussian source over a ChaCha8 stream (Box–Muller, one spare cached).
pub struct NormalSource {
    rng: ChaCha8Rng,
    spare: Option<f64>,
}

impl NormalSource {
    pub fn from_seed(seed: u64) -> Self {
        Self { rng: ChaCha8Rng::seed_from_u64(seed), spare: None }
    }

    pub fn for_trajectory(base_seed: u64, index: u64) -> Self {
        Self::from_seed(trajectory_seed(base_seed, index))
    }

    /// Uniform in `(0, 1]`: 53 mantissa bits, never exactly zero.
    #[inline]
    pub fn next_open_uniform(&mut self) -> f64 {
        (((self.rng.next_u64() >> 11) + 1) as f64) * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `[0, 1)`.
    #[inline]
    pub fn next_uniform(&mut self) -> f64 {
        ((self.rng.next_u64() >> 11) as f64) * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal draw.
    #[inline]
    pub fn next_normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = self.next_open_uniform();
        let u2 = self.next_uniform();
        let radius = (-2.0 * u1.ln()).sqrt();
        let angle = std::f64::consts::TAU * u2;
        self.spare = Some(radius * angle.sin());
        radius * angle.cos()
    }
}
