//! Data-parallel driver for the enumeration inner loops.
//!
//! With the `parallel` feature (default) the indexed reductions run on rayon;
//! without it they run sequentially. Every fold used through this module is
//! associative and commutative, so results are identical for any split and
//! for both drivers. The `*_seq` variants are always compiled; the benchmark
//! suite uses them as the sequential baseline.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

const PAR_THRESHOLD: u64 = 2048;

pub fn map_reduce<R, M, I, F>(n: u64, map: M, identity: I, fold: F) -> R
where
    R: Send,
    M: Fn(u64) -> R + Sync + Send,
    I: Fn() -> R + Sync + Send,
    F: Fn(R, R) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if n >= PAR_THRESHOLD {
            return (0..n)
                .into_par_iter()
                .fold(&identity, |acc, i| fold(acc, map(i)))
                .reduce(&identity, &fold);
        }
    }
    map_reduce_seq(n, map, identity, fold)
}

pub fn map_reduce_seq<R, M, I, F>(n: u64, map: M, identity: I, fold: F) -> R
where
    M: Fn(u64) -> R,
    I: Fn() -> R,
    F: Fn(R, R) -> R,
{
    let mut acc = identity();
    for i in 0..n {
        acc = fold(acc, map(i));
    }
    acc
}

/// Count indices in `0..n` satisfying the predicate.
pub fn count_where<P>(n: u64, pred: P) -> u64
where
    P: Fn(u64) -> bool + Sync + Send,
{
    map_reduce(n, |i| u64::from(pred(i)), || 0u64, |a, b| a + b)
}

pub fn count_where_seq<P>(n: u64, pred: P) -> u64
where
    P: Fn(u64) -> bool,
{
    map_reduce_seq(n, |i| u64::from(pred(i)), || 0u64, |a, b| a + b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn par_and_seq_agree() {
        let f = |i: u64| (i * i) % 7 == 1;
        assert_eq!(count_where(100_000, f), count_where_seq(100_000, f));
    }
}
