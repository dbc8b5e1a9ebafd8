//! Named, independent random streams.
//!
//! Every generator is a ChaCha8 keyed by a 64-bit seed; the stream name picks
//! the ChaCha stream id, so `dynamics` and `measurement` draws never overlap
//! even when they share a seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const DYNAMICS: &str = "dynamics";
pub const MEASUREMENT: &str = "measurement";

pub type StreamRng = ChaCha8Rng;

pub fn stream(seed: u64, name: &str) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id(name));
    rng
}

/// FNV-1a hash of the stream name.
pub fn stream_id(name: &str) -> u64 {
    name.bytes().fold(0xcbf2_9ce4_8422_2325_u64, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

/// Seed of realization `r` under `base`. Depends only on `(base, r)`, so
/// realization 0 is the same whatever the realization count.
pub fn realization_seed(base: u64, r: usize) -> u64 {
    splitmix64(base ^ splitmix64(r as u64))
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
