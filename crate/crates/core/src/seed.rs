//! Deterministic derivation of per-round RNG streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Folds a sequence of words into one 64-bit seed. Different sequences of
/// the same length map to different seeds with overwhelming probability.
pub fn derive(base: u64, parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(mix(base), |acc, &p| mix(acc ^ mix(p.wrapping_add(0x632b_e59b_d9b4_e019))))
}

pub fn rng(base: u64, parts: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(base, parts))
}

/// Stream tags keep the offset stream and the protocol stream of the same
/// round apart.
pub const STREAM_OFFSETS: u64 = 0x6f66_6673;
pub const STREAM_PROTOCOL: u64 = 0x7072_6f74;
