//! Seeded, order-independent random streams.
//!
//! Every random quantity is drawn from a ChaCha8 stream addressed by
//! `(seed, tag, index)`. ChaCha is counter based, so selecting the stream
//! number is free and two streams never overlap; results therefore do not
//! depend on the order or thread in which trials run.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Purpose tags keep streams for different quantities disjoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u32)]
pub enum StreamTag {
    MonteCarlo = 1,
    Centers = 2,
    Neighbors = 3,
    Inputs = 4,
    Design = 5,
    Misc = 6,
}

pub fn substream(seed: u64, tag: StreamTag, index: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((tag as u64) << 48) ^ index);
    rng
}
