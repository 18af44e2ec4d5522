//! Counter-based deterministic randomness.
//!
//! Every protocol round draws from its own ChaCha stream keyed by
//! `(seed, round index)`, so rounds can be evaluated in any order (or in
//! parallel) and still reproduce the serial transcript bit for bit. Sifting
//! uses a reserved stream of its own.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream id reserved for check-position selection during sifting.
const SIFT_STREAM: u64 = u64::MAX;

/// Independent stream for protocol round `index` under `seed`.
pub fn round_stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Stream used by `sift` to select check positions.
pub fn sift_stream(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(SIFT_STREAM);
    rng
}

/// Free-standing deterministic stream for everything that is not a protocol
/// round (attack-model sampling, detection experiments, ...).
pub fn tagged_stream(seed: u64, tag: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    rng.set_stream(tag);
    rng
}
