//! Seeded generators and the Gaussian draws shared by the simulation.
//!
//! Every random quantity in an experiment is drawn from a [`ChaCha8Rng`]
//! seeded by [`derive_seed`], so results depend only on the master seed and
//! the stream coordinates, never on thread scheduling.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub type SimRng = ChaCha8Rng;

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from a parent seed and a list of stream coordinates.
pub fn derive_seed(parent: u64, coords: &[u64]) -> u64 {
    coords
        .iter()
        .fold(mix(parent), |acc, &c| mix(acc ^ mix(c.wrapping_add(0x5851_F42D_4C95_7F2D))))
}

pub fn rng_from_seed(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Circularly-symmetric complex Gaussian with total variance `variance`
/// (`variance / 2` per real component).
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let scale = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re * scale, im * scale)
}
