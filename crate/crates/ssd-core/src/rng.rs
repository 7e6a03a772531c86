//! Deterministic random-stream derivation.
//!
//! Sampling chains split one user seed into independent per-(chain, step)
//! streams so that two runs sharing a prefix of decisions consume identical
//! noise: a chain step draws from `stream(seed, chain, t, tag)` no matter
//! what happened at other steps.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// splitmix64 finalizer; good avalanche, cheap, stable across platforms.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes an ordered list of words into a 256-bit ChaCha key.
pub fn derive_key(parts: &[u64]) -> [u8; 32] {
    let mut state = 0x53_53_44_31_u64; // arbitrary domain constant
    for &p in parts {
        state = splitmix64(state ^ splitmix64(p));
    }
    let mut key = [0u8; 32];
    for (i, chunk) in key.chunks_exact_mut(8).enumerate() {
        state = splitmix64(state.wrapping_add(i as u64 + 1));
        chunk.copy_from_slice(&state.to_le_bytes());
    }
    key
}

/// Counter-based stream for one (seed, chain, step, tag) coordinate.
pub fn stream(seed: u64, chain: u64, t: u64, tag: u64) -> ChaCha12Rng {
    ChaCha12Rng::from_seed(derive_key(&[seed, chain, t, tag]))
}

/// Stream tags, so different uses of the same (seed, chain, t) never collide.
pub mod tag {
    /// Initial x_T draw of a chain.
    pub const CHAIN_INIT: u64 = 1;
    /// Per-step posterior noise.
    pub const CHAIN_STEP: u64 = 2;
    /// Training loop (t selection, noise, init).
    pub const TRAIN: u64 = 3;
}
