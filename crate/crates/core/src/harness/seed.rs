//! Stable per-component seed derivation.

/// SplitMix64 output function.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for component `tag` of trial `trial` under `master`. Fixed across
/// platforms and releases; distinct inputs give unrelated streams.
pub fn derive_seed(master: u64, trial: u64, tag: &str) -> u64 {
    // FNV-1a over the tag, then chained mixing
    let mut h: u64 = 0xCBF2_9CE4_8422_2325;
    for b in tag.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    mix(mix(mix(master) ^ trial) ^ h)
}
