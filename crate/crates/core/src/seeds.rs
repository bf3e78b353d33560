//! Deterministic seed derivation.
//!
//! Every random stream in a run is derived from one master seed through
//! `child_seed(master, label, index)`: the label is FNV-1a hashed, the index
//! is folded in with a golden-ratio multiply, and the result is passed twice
//! through the SplitMix64 finalizer. Re-running any component with the same
//! master seed therefore reproduces its stream exactly, independent of what
//! ran before it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;
const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h = FNV_OFFSET;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(GOLDEN);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives the seed for stream `(label, index)` under `master`.
pub fn child_seed(master: u64, label: &str, index: u64) -> u64 {
    let mixed = splitmix64(master ^ fnv1a(label.as_bytes()));
    splitmix64(mixed ^ index.wrapping_mul(GOLDEN))
}

/// Seeded RNG for stream `(label, index)` under `master`.
pub fn child_rng(master: u64, label: &str, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(child_seed(master, label, index))
}
