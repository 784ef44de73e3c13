//! Seed derivation.
//!
//! Every random stream in the crate is a `ChaCha8Rng` seeded from a value
//! derived here, so results depend only on the master seed and the position
//! of the work item (episode index, period, purpose), never on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream purposes. Distinct tags keep demand, yield and estimator draws
/// independent even when they share an episode seed.
pub mod tag {
    pub const DEMAND: u64 = 0x44454d414e44;
    pub const YIELD: u64 = 0x5949454c44;
    pub const ESTIMATOR: u64 = 0x45535449;
    pub const RANDOM_POLICY: u64 = 0x524e44;
}

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Child seed for work item `index` under `parent`.
#[inline]
pub fn derive(parent: u64, index: u64) -> u64 {
    mix64(parent ^ mix64(index))
}

/// Seed of episode `index` under a master seed.
pub fn episode_seed(master: u64, index: u64) -> u64 {
    derive(master, index)
}

pub fn stream(seed: u64, purpose: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(seed, purpose))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn derivation_is_stable() {
        // frozen so that seeds survive refactors and process restarts
        assert_eq!(mix64(0), 0xe220_a839_7b1d_cdaf);
        assert_eq!(derive(7, 3), derive(7, 3));
        assert_ne!(derive(7, 3), derive(7, 4));
        assert_ne!(derive(7, 3), derive(8, 3));
    }

    #[test]
    fn purposes_are_independent_streams() {
        let a: u64 = stream(11, tag::DEMAND).random();
        let b: u64 = stream(11, tag::YIELD).random();
        assert_ne!(a, b);
    }
}
