//! Deterministic derivation of independent RNG streams.
//!
//! Every random object in the crate is drawn from a ChaCha12 stream keyed by
//! a short label: `(master_seed, n, replication)` for wave coefficients, or
//! `(master_seed, tag, index)` for auxiliary draws such as limit-law
//! reference samples. Streams are derived eagerly from the label, never by
//! splitting a shared generator, so replications can be scheduled across
//! threads in any order while every sample stays bit-reproducible.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// SplitMix64 finalizer; full avalanche on 64 bits.
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Expand a label of 64-bit words into a 32-byte ChaCha key by absorbing
/// each word through the mixer, then squeezing a short SplitMix64 stream.
pub fn derive_key(words: &[u64]) -> [u8; 32] {
    const GAMMA: u64 = 0x9e3779b97f4a7c15;
    let mut state = 0x243f6a8885a308d3u64; // pi digits, nothing up the sleeve
    for &w in words {
        state = mix64(state ^ w).wrapping_add(GAMMA);
    }
    let mut key = [0u8; 32];
    for (i, chunk) in key.chunks_exact_mut(8).enumerate() {
        let out = mix64(state.wrapping_add((i as u64 + 1).wrapping_mul(GAMMA)));
        chunk.copy_from_slice(&out.to_le_bytes());
    }
    key
}

/// Stream for the wave coefficients of replication `replication` at index `n`.
pub fn coefficient_rng(master_seed: u64, n: u64, replication: u64) -> ChaCha12Rng {
    ChaCha12Rng::from_seed(derive_key(&[0x01, master_seed, n, replication]))
}

/// Stream for auxiliary draws, labeled by a purpose tag and an index.
pub fn tagged_rng(master_seed: u64, tag: &str, index: u64) -> ChaCha12Rng {
    let mut words = vec![0x02u64, master_seed];
    for chunk in tag.as_bytes().chunks(8) {
        let mut buf = [0u8; 8];
        buf[..chunk.len()].copy_from_slice(chunk);
        words.push(u64::from_le_bytes(buf));
    }
    words.push(tag.len() as u64);
    words.push(index);
    ChaCha12Rng::from_seed(derive_key(&words))
}
