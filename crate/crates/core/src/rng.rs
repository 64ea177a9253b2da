//! Seeded random streams.
//!
//! Every stochastic routine takes an explicit `u64` seed. Independent
//! sub-streams (one per trial, per bootstrap, per training run) are derived
//! with [`derive_seed`], a SplitMix64 mix of the parent seed and the stream
//! index, so parallel execution never changes results.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

pub fn seeded(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    splitmix64(seed ^ splitmix64(stream.wrapping_add(0x9E37_79B9_7F4A_7C15)))
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng as _;

    #[test]
    fn streams_are_distinct_and_stable() {
        let a = derive_seed(7, 0);
        assert_eq!(a, derive_seed(7, 0));
        assert_ne!(a, derive_seed(7, 1));
        assert_ne!(a, derive_seed(8, 0));
        let x: u64 = seeded(a).random();
        let y: u64 = seeded(a).random();
        assert_eq!(x, y);
    }
}
