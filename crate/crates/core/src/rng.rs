//! Seeded random source shared by layout generation and the engine.

use rand::SeedableRng;

pub type SimRng = rand_xoshiro::SplitMix64;

pub fn seeded(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}
