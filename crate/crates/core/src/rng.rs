//! Seeded random streams.
//!
//! Every random draw in the crate comes from a [`ChaCha8Rng`] derived from a
//! run seed and a stream name, so results do not depend on call order across
//! unrelated components.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use rand_chacha::ChaCha8Rng as Rng;

/// Derive an independent generator for `stream` from `seed`.
pub fn substream(seed: u64, stream: &str) -> ChaCha8Rng {
    // FNV-1a over the stream name, mixed with the seed.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in stream.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    ChaCha8Rng::seed_from_u64(splitmix(seed ^ h))
}

/// Generator for the `index`-th member of a family of streams (restarts, folds).
pub fn indexed(seed: u64, stream: &str, index: u64) -> ChaCha8Rng {
    let mut base = substream(seed, stream);
    let s = rand::RngCore::next_u64(&mut base);
    ChaCha8Rng::seed_from_u64(splitmix(s.wrapping_add(index.wrapping_mul(0x9e37_79b9_7f4a_7c15))))
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
