//! Counter-based RNG substreams.
//!
//! Every random decision in a run is drawn from a stream keyed by the master
//! seed plus a short tag path (epoch, agent, pair index, ...). Streams are
//! independent of evaluation order, so results stay bitwise reproducible no
//! matter how work is scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[inline]
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives an independent child seed from `seed` and a tag path.
pub fn derive_seed(seed: u64, tags: &[u64]) -> u64 {
    let mut state = seed ^ 0x6A09_E667_F3BC_C908;
    for &t in tags {
        state = splitmix64(&mut state) ^ t.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    }
    splitmix64(&mut state)
}

/// Derives an independent generator from `seed` and a tag path.
pub fn substream(seed: u64, tags: &[u64]) -> ChaCha8Rng {
    let mut state = seed ^ 0x6A09_E667_F3BC_C908;
    for &t in tags {
        state = splitmix64(&mut state) ^ t.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    }
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}
