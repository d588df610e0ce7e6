//! Pinned pseudo-random generator.
//!
//! Every random draw in the crate goes through xoshiro256++ seeded by
//! expanding a `u64` with SplitMix64, so fixtures are bit-stable across
//! platforms and dependency upgrades of `rand`'s default generators.

use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;

pub type QsegRng = Xoshiro256PlusPlus;

pub fn seeded(seed: u64) -> QsegRng {
    Xoshiro256PlusPlus::seed_from_u64(seed)
}
