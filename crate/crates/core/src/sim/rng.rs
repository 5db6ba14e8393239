//! Seeded random streams. Every (seed, purpose) pair gets its own ChaCha
//! stream, so adding a consumer never shifts the draws of another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const STREAM_FACTOR: u64 = 1;
pub const STREAM_IDIOSYNCRATIC_1: u64 = 2;
pub const STREAM_IDIOSYNCRATIC_2: u64 = 3;
pub const STREAM_TAIL_CHANGES: u64 = 10;
pub const STREAM_TAIL_PRICES: u64 = 11;
pub const STREAM_TAIL_SIGNS: u64 = 12;

pub fn stream(seed: u64, purpose: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(purpose);
    rng
}
