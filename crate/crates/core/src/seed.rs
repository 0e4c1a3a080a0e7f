//! Counter-based 64-bit mixing used for every reproducible random draw.
//!
//! All randomness in the crate is derived from a master seed through these
//! functions, so results do not depend on thread scheduling or platform.

/// Weyl increment of SplitMix64.
pub const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 output finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// The `counter`-th output of a SplitMix64 stream started at `seed`.
#[inline]
pub fn stream_value(seed: u64, counter: u64) -> u64 {
    mix64(seed.wrapping_add(GOLDEN_GAMMA.wrapping_mul(counter.wrapping_add(1))))
}

/// Uniform double in `[0, 1)` built from the top 53 bits of a stream value.
#[inline]
pub fn stream_uniform(seed: u64, counter: u64) -> f64 {
    (stream_value(seed, counter) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Derives an independent child seed from a master seed and two indices.
///
/// `split(master, a, b) = stream_value(stream_value(master, a), b)`.
pub fn split(master: u64, a: u64, b: u64) -> u64 {
    stream_value(stream_value(master, a), b)
}
