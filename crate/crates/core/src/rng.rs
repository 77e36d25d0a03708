//! Deterministic seeded random streams.
//!
//! Randomised routines never share one advancing generator. Each item i of a
//! batch gets its own stream keyed by `hash64(seed, i)`, so the result for
//! item i depends only on (seed, i): batches can be produced in any order,
//! split across any number of workers, or resumed, and stay bit-identical.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// Mixes a seed and a stream index into one well-scrambled 64-bit key.
///
/// This is the splitmix64 output function applied to `seed + (index+1)*GAMMA`,
/// i.e. `hash64(seed, i)` is the (i+1)-th output of a splitmix64 generator
/// seeded with `seed`. The construction is fixed; changing it would silently
/// re-seed every experiment.
pub fn hash64(seed: u64, index: u64) -> u64 {
    let mut z = seed.wrapping_add(index.wrapping_add(1).wrapping_mul(GAMMA));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent generator for stream `index` under `seed`.
pub fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(hash64(seed, index))
}
