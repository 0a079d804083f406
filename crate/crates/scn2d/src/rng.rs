//! Deterministic child-stream derivation.
//!
//! Every stochastic routine in this crate draws from an independent ChaCha
//! stream derived from a master seed plus a path of integer tags (node index,
//! grid indices, candidate index, trial index, ...). Results are therefore
//! identical under any parallel scheduling: a worker never shares a stream.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

#[inline]
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive an independent random stream from a master seed and a tag path.
pub fn child_rng(master: u64, tags: &[u64]) -> ChaCha8Rng {
    let mut state = mix(master ^ GAMMA);
    for &t in tags {
        state = mix(state.wrapping_add(GAMMA).wrapping_add(mix(t ^ GAMMA)));
    }
    let mut seed = [0u8; 32];
    let mut s = state;
    for chunk in seed.chunks_mut(8) {
        s = mix(s.wrapping_add(GAMMA));
        chunk.copy_from_slice(&s.to_le_bytes());
    }
    ChaCha8Rng::from_seed(seed)
}

/// Stable 64-bit digest of a byte string, used to derive stream tags from names.
pub fn digest64(bytes: &[u8]) -> u64 {
    let mut state = mix(GAMMA);
    for chunk in bytes.chunks(8) {
        let mut word = [0u8; 8];
        word[..chunk.len()].copy_from_slice(chunk);
        state = mix(state.wrapping_add(GAMMA) ^ u64::from_le_bytes(word));
    }
    mix(state.wrapping_add(bytes.len() as u64))
}
