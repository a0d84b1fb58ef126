//! Stable seed derivation for independent substreams.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for substream `(a, b)` of `master`. Adding new indices never
/// changes the seeds of existing ones.
pub fn derive_seed(master: u64, a: u64, b: u64) -> u64 {
    let h = mix64(master.wrapping_add(GOLDEN));
    let h = mix64(h ^ a.wrapping_mul(GOLDEN).wrapping_add(0x632B_E59B_D9B4_E019));
    mix64(h ^ b.wrapping_mul(0xD6E8_FEB8_6659_FD93).wrapping_add(GOLDEN))
}
