//! Seeded, splittable random streams.
//!
//! Every stochastic routine in this crate derives its randomness from a
//! `(seed, stream)` pair, so results are identical regardless of execution
//! order or parallelism: stream `i` always produces the same draws.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// An independent generator for the given logical stream of a master seed.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Derives a child seed from a master seed and a tag (splitmix64 mixing).
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    splitmix64(seed ^ splitmix64(tag))
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
