//! Seeded, splittable random streams.
//!
//! Every stochastic routine takes an explicit generator. Independent
//! sub-computations get their own stream derived from a seed and a stream id,
//! so results do not depend on scheduling.

use rand::{Rng, SeedableRng};
pub use rand_chacha::ChaCha8Rng as StreamRng;

/// Generator for stream `id` of `seed`.
pub fn stream(seed: u64, id: u64) -> StreamRng {
    let mut rng = StreamRng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Draws a fresh child seed from `rng`.
pub fn fork(rng: &mut impl Rng) -> StreamRng {
    StreamRng::seed_from_u64(rng.random())
}
