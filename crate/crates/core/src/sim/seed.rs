//! Seed derivation. Each session gets independent streams for each kind of
//! random draw, so adding a draw of one kind never shifts the others.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent random streams within one simulated session.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Abandon = 1,
    FactReaction = 2,
    Rating = 3,
    TaskChoice = 4,
    Return = 5,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes `parts` into one 64-bit seed.
pub fn derive_seed(parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(0x6a09_e667_f3bc_c908, |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

/// Seed for session `index` of a run. The arm is deliberately not mixed in:
/// session `i` of the control and treatment arms share every stream.
pub fn session_seed(base_seed: u64, index: usize) -> u64 {
    derive_seed(&[base_seed, index as u64])
}

pub fn stream_rng(session_seed: u64, stream: Stream) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(&[session_seed, stream as u64]))
}
