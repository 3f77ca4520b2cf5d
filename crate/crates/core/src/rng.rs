//! Per-trajectory random streams.
//!
//! Every trajectory draws from its own ChaCha8 stream keyed on
//! `(master_seed, stream_index)`. ChaCha is counter-based, so stream `k` does
//! not depend on how many numbers other streams consumed, or on which worker
//! ran them.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

pub fn stream(master_seed: u64, stream_index: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(stream_index);
    rng
}
