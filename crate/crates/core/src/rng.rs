//! Deterministic randomness.
//!
//! All sampling in the crate goes through ChaCha8 streams derived from a
//! 64-bit seed: stream `k` of seed `s` is `ChaCha8Rng::seed_from_u64(s)` with
//! its stream id set to `k`. The same seed gives bit-identical sample
//! sequences on every platform, and samplers that fan out across threads
//! assign one stream per fixed-size block of work so the outcome does not
//! depend on the thread count.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Copy, Debug)]
pub struct SeedStreams {
    seed: u64,
}

impl SeedStreams {
    pub fn new(seed: u64) -> SeedStreams {
        SeedStreams { seed }
    }

    pub fn stream(&self, index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index);
        rng
    }
}

/// Uniform random `k`-subset of `0..n`, returned sorted.
pub fn sample_subset(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Vec<usize> {
    assert!(k <= n);
    // Floyd's algorithm: k iterations, no O(n) shuffle.
    let mut chosen = Vec::with_capacity(k);
    for j in (n - k)..n {
        let t = rng.gen_range(0..=j);
        if chosen.contains(&t) {
            chosen.push(j);
        } else {
            chosen.push(t);
        }
    }
    chosen.sort_unstable();
    chosen
}

/// Random equal-size partition of `0..n` into `q` parts (each sorted).
pub fn sample_partition(rng: &mut ChaCha8Rng, n: usize, q: usize) -> Vec<Vec<usize>> {
    assert!(q > 0 && n % q == 0);
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(rng);
    let part = n / q;
    (0..q)
        .map(|i| {
            let mut block: Vec<usize> = perm[i * part..(i + 1) * part].to_vec();
            block.sort_unstable();
            block
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_reproducible() {
        let s = SeedStreams::new(42);
        let a: Vec<u64> = (0..5).map(|_| s.stream(3).gen()).collect();
        let b: Vec<u64> = (0..5).map(|_| s.stream(3).gen()).collect();
        assert_eq!(a, b);
        assert_ne!(s.stream(0).gen::<u64>(), s.stream(1).gen::<u64>());
    }

    #[test]
    fn subsets_are_valid() {
        let mut rng = SeedStreams::new(7).stream(0);
        for _ in 0..100 {
            let s = sample_subset(&mut rng, 10, 4);
            assert_eq!(s.len(), 4);
            assert!(s.windows(2).all(|w| w[0] < w[1]));
            assert!(s.iter().all(|&x| x < 10));
        }
    }

    #[test]
    fn partitions_are_valid() {
        let mut rng = SeedStreams::new(7).stream(0);
        let parts = sample_partition(&mut rng, 12, 3);
        let mut all: Vec<usize> = parts.iter().flatten().copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..12).collect::<Vec<_>>());
    }
}
