//! Deterministic seed derivation.
//!
//! Every randomized component takes an explicit `u64` seed and derives
//! sub-seeds through [`splitmix64`], so the same configuration reproduces the
//! same run regardless of thread count or platform.

/// SplitMix64 mixing step. Maps a counter to a well-distributed 64-bit value;
/// used to derive independent per-tree and per-instance seeds from one root
/// seed without correlation between consecutive indices.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// FNV-1a over bytes. Stable across runs and platforms; used to fold string
/// identifiers (for example instance ids) into seed material.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

/// Derives a child seed from a root seed and an index.
pub fn derive_seed(root: u64, index: u64) -> u64 {
    root ^ splitmix64(index)
}

/// Derives a child seed from a root seed and a string label.
pub fn derive_seed_str(root: u64, label: &str) -> u64 {
    root ^ splitmix64(fnv1a64(label.as_bytes()))
}
