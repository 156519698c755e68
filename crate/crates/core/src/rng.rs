//! Reproducible random streams.
//!
//! Every stochastic operation takes its generator explicitly. Independent
//! workers (realizations, Monte-Carlo chunks) get their own stream derived
//! from a master seed and an index, so results never depend on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Stream `index` of the family keyed by `master_seed`.
///
/// ChaCha streams with a shared key are independent; the key is the master
/// seed and the 64-bit stream id is the index.
pub fn seed_stream(master_seed: u64, index: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng
}

/// Sub-stream for a nested task: mixes `salt` into the master seed so a
/// helper can fan out its own indices without colliding with the caller's.
pub fn derived_stream(master_seed: u64, salt: u64, index: u64) -> StreamRng {
    let key = master_seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15).rotate_left(17);
    seed_stream(key, index)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::RngCore;
    use std::collections::HashSet;

    fn draws(mut rng: StreamRng, n: usize) -> Vec<u64> {
        (0..n).map(|_| rng.next_u64()).collect()
    }

    #[test]
    fn same_seed_and_index_repeat() {
        assert_eq!(
            draws(seed_stream(42, 0), 100),
            draws(seed_stream(42, 0), 100)
        );
    }

    #[test]
    fn neighbouring_indices_differ() {
        let a = draws(seed_stream(42, 0), 100);
        let b = draws(seed_stream(42, 1), 100);
        assert!(a.iter().zip(&b).all(|(x, y)| x != y));
    }

    #[test]
    fn thousand_streams_have_distinct_fingerprints() {
        let prints: HashSet<Vec<u64>> = (0..1000).map(|k| draws(seed_stream(42, k), 4)).collect();
        assert_eq!(prints.len(), 1000);
    }
}
