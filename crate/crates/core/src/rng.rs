//! Seeded random streams. Every chain, particle and resampling step draws
//! from its own stream so results do not depend on thread scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Independent stream `stream` derived from a run seed.
pub fn stream(seed: u64, stream: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Stream for item `index` of a sub-stream family `family`.
pub fn substream(seed: u64, family: u64, index: u64) -> StreamRng {
    stream(seed ^ family.wrapping_mul(0x9E37_79B9_7F4A_7C15), index)
}
