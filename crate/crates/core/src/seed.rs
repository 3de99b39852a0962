//! Counter-based seed splitting.
//!
//! Every random stream is identified by `(rng_seed, run_index, ss_index, role)`.
//! The four words are folded through SplitMix64 one at a time, so adding a new
//! role or station never shifts the seeds of existing streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum StreamRole {
    /// Shadowing and fading of one station.
    Channel = 1,
    /// Flow start offset and packet corruption draws of one station.
    Tcp = 2,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive_seed(rng_seed: u64, run_index: u64, ss_index: u64, role: StreamRole) -> u64 {
    [run_index, ss_index, role as u64]
        .into_iter()
        .fold(splitmix64(rng_seed), |acc, word| {
            splitmix64(acc ^ splitmix64(word))
        })
}

pub fn stream(rng_seed: u64, run_index: u64, ss_index: u64, role: StreamRole) -> SimRng {
    SimRng::seed_from_u64(derive_seed(rng_seed, run_index, ss_index, role))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn seeds_are_distinct_across_coordinates() {
        let mut seen = HashSet::new();
        for run in 0..20 {
            for ss in 0..20 {
                for role in [StreamRole::Channel, StreamRole::Tcp] {
                    assert!(seen.insert(derive_seed(7, run, ss, role)));
                }
            }
        }
    }

    #[test]
    fn seeds_are_stable() {
        assert_eq!(
            derive_seed(1, 0, 0, StreamRole::Channel),
            derive_seed(1, 0, 0, StreamRole::Channel)
        );
        assert_ne!(
            derive_seed(1, 0, 0, StreamRole::Channel),
            derive_seed(2, 0, 0, StreamRole::Channel)
        );
    }
}
