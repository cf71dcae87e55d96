//! Deterministic random streams.
//!
//! A stream is addressed by `(root seed, domain, index)`. The domain keeps
//! the dynamical noise and the detection noise of the same trajectory
//! independent; the index selects a ChaCha stream, so trajectories of an
//! ensemble never overlap regardless of execution order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Domain {
    Dynamics = 0x6479_6e61,
    Measurement = 0x6d65_6173,
}

/// SplitMix64 finalizer.
pub fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Child seed for sub-experiment `salt` (sweep point, repetition).
pub fn derive_seed(root: u64, salt: u64) -> u64 {
    mix(mix(root) ^ salt)
}

pub fn stream(seed: u64, domain: Domain, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(mix(seed ^ domain as u64));
    rng.set_stream(index);
    rng
}
