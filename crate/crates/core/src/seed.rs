//! Deterministic seed derivation.
//!
//! Every random decision in the crate draws from a [`ChaCha8Rng`] seeded by
//! [`derive`], so results depend only on a base seed and a stable label, never
//! on execution order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes `base` with a sequence of labels into a new 64-bit seed.
pub fn derive(base: u64, parts: &[&str]) -> u64 {
    let mut h = FNV_OFFSET ^ splitmix64(base);
    for part in parts {
        for b in part.bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(FNV_PRIME);
        }
        // separator so ["ab","c"] != ["a","bc"]
        h ^= 0xff;
        h = h.wrapping_mul(FNV_PRIME);
    }
    splitmix64(h)
}

/// Mixes `base` with one integer index.
pub fn derive_index(base: u64, tag: &str, index: usize) -> u64 {
    derive(base, &[tag, &index.to_string()])
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
