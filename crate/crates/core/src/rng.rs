//! Seeded random streams.
//!
//! Every chain gets its own ChaCha8 stream derived from the run seed and the
//! chain index, so results do not depend on how chains are scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type ChainRng = ChaCha8Rng;

/// Generator for `stream` under `seed`.
pub fn seeded(seed: u64, stream: u64) -> ChainRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
