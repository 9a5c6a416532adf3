//! Counter-keyed random streams.
//!
//! Every random draw in the crate comes from a ChaCha8 stream selected by the
//! user seed plus a tuple of integer tags (replicate index, chunk index, purpose).
//! Streams never depend on thread scheduling, so results are identical for any
//! degree of parallelism.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Purpose tags, kept distinct so that different consumers never share a stream.
pub mod purpose {
    pub const PATCHES: u64 = 1;
    pub const CHAIN: u64 = 2;
    pub const CTMC: u64 = 3;
    pub const INITIAL_STATE: u64 = 4;
    pub const CONCENTRATION: u64 = 5;
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Returns the stream for `seed` identified by `tags`.
pub fn stream(seed: u64, tags: &[u64]) -> ChaCha8Rng {
    let mut key = 0x6A09_E667_F3BC_C909u64;
    for &t in tags {
        key = splitmix64(key ^ t);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(key);
    rng
}
