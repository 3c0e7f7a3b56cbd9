//! Seeded random streams.
//!
//! Every random consumer gets its own ChaCha8 stream. A stream is identified
//! by `(seed, stream_id)`: the generator is seeded with
//! `ChaCha8Rng::seed_from_u64(seed)` and then switched to the 64-bit stream
//! `stream_id` via `set_stream`. Streams with distinct ids never overlap, so
//! chains, candidates and replicates can run in any order or in parallel
//! without changing their output.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Stream ids reserved for the different consumers of a run seed.
pub mod streams {
    pub const SIMULATE: u64 = 0x5349_4d00;
    pub const CHAIN: u64 = 0x4348_0000;
    pub const REPLICATE: u64 = 0x5245_5000;
    pub const GEWEKE: u64 = 0x4745_5700;
}

pub fn stream(seed: u64, stream_id: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id);
    rng
}

/// Derive a child seed, e.g. the seed of replicate `index` under `base`.
pub fn child_seed(base: u64, index: u64) -> u64 {
    stream(base, streams::REPLICATE.wrapping_add(index)).next_u64()
}
