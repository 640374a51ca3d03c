//! Seeded random streams.
//!
//! Every Monte Carlo task draws from its own ChaCha stream derived from the
//! master seed and a task index, so results do not depend on how tasks are
//! spread over worker threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Trials per independently seeded block.
pub const BLOCK_TRIALS: u64 = 1 << 16;

pub fn stream_rng(master_seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(stream);
    rng
}

/// Splits `trials` into `(block_index, block_len)` pairs of at most
/// [`BLOCK_TRIALS`].
pub fn blocks(trials: u64) -> Vec<(u64, u64)> {
    (0..trials.div_ceil(BLOCK_TRIALS))
        .map(|b| (b, BLOCK_TRIALS.min(trials - b * BLOCK_TRIALS)))
        .collect()
}

/// Seed for an independent sub-run `tag` of a master seed.
pub fn derive_seed(master_seed: u64, tag: u64) -> u64 {
    use rand::RngCore;
    stream_rng(master_seed, u64::MAX - tag).next_u64()
}
