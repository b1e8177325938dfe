//! Stable seed derivation for reproducible ensembles.
//!
//! Every randomized stage derives child seeds from a run seed and an index
//! through a fixed 64-bit mix (splitmix64 finalizer). The mapping is part of
//! the reproducibility contract: the same (run seed, index) yields the same
//! child seed on every platform and release.

/// Derive a child seed from a base seed and a stream index.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    let mut z = base
        .wrapping_add(0x9e3779b97f4a7c15)
        .wrapping_add(index.wrapping_mul(0xbf58476d1ce4e5b9));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}
