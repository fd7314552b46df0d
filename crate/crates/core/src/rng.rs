//! Seeded random streams.
//!
//! Every stream is a ChaCha8 generator keyed by the 64-bit seed with the
//! stream id placed in ChaCha's stream word. ChaCha is counter based, so
//! streams are independent and a given (seed, stream_id) pair produces the same
//! bits on every platform.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

pub fn stream_rng(seed: u64, stream_id: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id);
    rng
}
