//! Deterministic randomness: a 64-bit master seed plus an integer substream
//! index identifies every draw. Replicate `i` of any Monte-Carlo job uses
//! substream `i`, so results do not depend on evaluation order or thread
//! count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Provenance record attached to simulated observations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngTag {
    pub seed: u64,
    pub substream: u64,
}

/// RNG for one substream of a master seed.
pub fn substream_rng(seed: u64, substream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(substream);
    rng
}

/// Derives an independent master seed for a sub-phase of a larger job
/// (splitmix64 finalizer).
pub fn derive_seed(seed: u64, phase: u64) -> u64 {
    let mut z = seed ^ phase.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn substreams_are_reproducible_and_distinct() {
        let a: f64 = substream_rng(7, 0).random();
        let b: f64 = substream_rng(7, 0).random();
        let c: f64 = substream_rng(7, 1).random();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn derived_seeds_differ_by_phase() {
        assert_ne!(derive_seed(1, 0), derive_seed(1, 1));
        assert_eq!(derive_seed(1, 2), derive_seed(1, 2));
    }
}
