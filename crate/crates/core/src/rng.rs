//! Seeded random number generation.
//!
//! The generator algorithm is part of the file-format contract: fixtures in
//! this repository are reproducible from a `u64` seed by any implementation
//! that follows the recipe below, not just by this crate.
//!
//! * Stream: ChaCha20 (rfc8439 block function, 20 rounds) with the 32-byte key
//!   holding the seed as little-endian `u64` in bytes 0..8, zeros elsewhere,
//!   and an all-zero nonce. This is [`rng_from_seed`].
//! * Uniform doubles come from the stream via `rand`'s standard `f64`
//!   conversion: 53 random bits scaled to `[0, 1)`.
//! * Gaussians use the Box–Muller map `sqrt(-2 ln u1) * cos(2 pi u2)` with
//!   `u1 = 1 - uniform` (so the log argument is in `(0, 1]`), one fresh pair
//!   of uniforms per sample. This is [`gaussian`].
//! * Independent child seeds come from SplitMix64 ([`derive_seed`]).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

/// Deterministic generator for a `u64` seed. See the module docs for the
/// exact construction.
pub fn rng_from_seed(seed: u64) -> ChaCha20Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    ChaCha20Rng::from_seed(key)
}

/// SplitMix64 step, used to derive independent per-task seeds from a root
/// seed, e.g. one seed per trial or per sequence index.
pub fn derive_seed(root: u64, index: u64) -> u64 {
    let mut z = root
        .wrapping_add(0x9e3779b97f4a7c15u64.wrapping_mul(index.wrapping_add(1)));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// One standard Gaussian sample via Box–Muller. Consumes exactly two uniform
/// doubles from the stream.
pub fn gaussian<R: Rng>(rng: &mut R) -> f64 {
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen::<f64>();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}
