//! Keyed 64-bit PRF used for every seeded derivation in the crate.
//!
//! Built from the SplitMix64 finalizer; output depends only on the inputs, so
//! designs and trial seeds are identical across platforms and processes.

/// Domain-separation tags.
pub mod tag {
    pub const CHECK_S1: u64 = 0x5331;
    pub const CHECK_S2: u64 = 0x5332;
    pub const LEFT_REGULAR: u64 = 0x4c52;
    pub const BERNOULLI: u64 = 0x4245;
    pub const TRIAL: u64 = 0x5452;
    pub const GRAPH: u64 = 0x4752;
    pub const SIGNATURE: u64 = 0x5347;
    pub const SUPPORT: u64 = 0x5350;
    pub const NOISE: u64 = 0x4e4f;
    pub const ORDER: u64 = 0x4f52;
}

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[inline]
pub fn derive(seed: u64, tag: u64, index: u64) -> u64 {
    let keyed = mix64(seed.wrapping_add(GOLDEN.wrapping_mul(tag.wrapping_add(1))));
    mix64(keyed ^ mix64(index.wrapping_add(GOLDEN)))
}

/// Two-index variant, e.g. for (item, right node) pairs.
#[inline]
pub fn derive2(seed: u64, tag: u64, a: u64, b: u64) -> u64 {
    derive(derive(seed, tag, a), tag, b)
}
