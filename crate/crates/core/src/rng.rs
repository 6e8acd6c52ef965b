//! Seeded random streams.
//!
//! Every independent unit of work (a restart, a neighborhood draw, a synthetic
//! row) gets its own ChaCha8 stream selected by `(seed, domain, index)`, so
//! results do not depend on the order or the thread in which units run.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Which family of work units a stream belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u16)]
pub enum Domain {
    Restart = 1,
    Neighborhood = 2,
    Subsample = 3,
    SynthRow = 4,
    Trial = 5,
    Sweep = 6,
}

const INDEX_BITS: u32 = 48;

/// Stream for unit `index` of `domain` under `seed`.
pub fn stream(seed: u64, domain: Domain, index: u64) -> Rng {
    debug_assert!(index < 1 << INDEX_BITS);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((domain as u64) << INDEX_BITS | (index & ((1 << INDEX_BITS) - 1)));
    rng
}

/// Derives a child seed, used when one experiment hands seeds to another.
pub fn derive_seed(seed: u64, domain: Domain, index: u64) -> u64 {
    use rand::RngCore;
    stream(seed, domain, index).next_u64()
}
