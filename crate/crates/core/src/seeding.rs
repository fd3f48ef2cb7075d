//! Seed plumbing. Every stochastic component takes a `u64` seed and builds a
//! ChaCha stream from it, so results do not depend on platform or thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Mixes a base seed with a list of tags (splitmix64 finalizer per word).
pub fn derive_seed(base: u64, tags: &[u64]) -> u64 {
    let mut h = mix(base ^ 0x9e37_79b9_7f4a_7c15);
    for &t in tags {
        h = mix(h ^ t.wrapping_mul(0xbf58_476d_1ce4_e5b9));
    }
    h
}

fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
