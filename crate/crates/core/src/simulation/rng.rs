//! Seeded, platform-independent random streams.
//!
//! Every replicate draws from its own ChaCha8 stream. The 64-bit seed of the
//! stream is `splitmix64(master ^ splitmix64(cell))` and the stream id is the
//! replicate index, so replicate `r` of a data cell sees the same numbers
//! regardless of how many threads run or which other cells are present.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Generator for a single simulated dataset.
pub fn seeded(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}

/// Substream for replicate `rep` of data cell `cell`.
pub fn replicate_rng(master: u64, cell: u64, rep: u64) -> SimRng {
    let mut rng = SimRng::seed_from_u64(splitmix64(master ^ splitmix64(cell)));
    rng.set_stream(rep);
    rng
}
