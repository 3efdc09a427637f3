//! Seeded generator plumbing.
//!
//! Every parallel task draws from its own ChaCha stream whose seed is a hash of
//! the master seed and the task's coordinates, so results never depend on how
//! work is scheduled across threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a master seed with a path of stream coordinates.
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(master), |acc, &k| splitmix64(acc ^ splitmix64(k)))
}

pub fn rng_from_seed(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}

pub fn substream(master: u64, path: &[u64]) -> SimRng {
    rng_from_seed(derive_seed(master, path))
}

/// Draws a fresh master seed from a caller-supplied generator.
pub fn fork_seed<R: Rng + ?Sized>(rng: &mut R) -> u64 {
    rng.next_u64()
}
