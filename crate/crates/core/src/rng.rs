//! Seed derivation and deterministic RNG streams.
//!
//! Every subsystem draws from its own stream derived from the master seed and
//! a string label, so adding a subsystem never perturbs the draws of another.
//! The splitting rule: `sub_seed = splitmix64(master ^ fnv1a(label))`.

use rand_chacha::rand_core::{RngCore, SeedableRng};
pub use rand_chacha::ChaCha12Rng;

/// 64-bit FNV-1a over the label bytes.
fn fnv1a(label: &str) -> u64 {
    let mut hash: u64 = 0xcbf29ce484222325;
    for b in label.as_bytes() {
        hash ^= *b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}

/// One round of splitmix64.
fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Derive a subsystem seed from the master seed and a label.
pub fn derive_seed(master: u64, label: &str) -> u64 {
    splitmix64(master ^ fnv1a(label))
}

/// A seeded stream for the given subsystem label.
pub fn stream(master: u64, label: &str) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(derive_seed(master, label))
}

/// Digest of an RNG's state: the next u64 a clone of it would produce.
/// Recorded in checkpoints; does not advance the stream.
pub fn state_digest(rng: &ChaCha12Rng) -> u64 {
    rng.clone().next_u64()
}
