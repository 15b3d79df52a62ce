//! Counter-style random streams: one ChaCha8 stream per `(master seed, tag, index)`.
//!
//! Trial `i` of an experiment always draws from the same stream regardless of
//! which worker runs it, so serial and parallel runs agree bit for bit.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream tags used by the experiment drivers.
pub mod tags {
    pub const WALK: u64 = 1;
    pub const COUPLED: u64 = 2;
    pub const GRADIENT_X: u64 = 3;
    pub const GRADIENT_Y: u64 = 4;
    pub const OU: u64 = 5;
    pub const CONDITION: u64 = 6;
    pub const PROBES: u64 = 7;
    pub const RADIAL: u64 = 8;
}

/// SplitMix64 finalizer.
pub fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Independent stream for `index` within the experiment identified by `(master, tag)`.
pub fn stream(master: u64, tag: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(mix(master ^ mix(tag)));
    rng.set_stream(index);
    rng
}
