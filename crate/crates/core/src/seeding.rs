//! Counter-based seeding: sample `i` of a run keyed by `seed` always draws from
//! the same stream, whichever worker evaluates it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream `index` of a ChaCha8 generator keyed by `seed`.
pub fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}
