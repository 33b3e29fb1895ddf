//! Sublinear randomized property testers for tensor reducibility and matrix
//! rank, exact-fraction oracles, and the tuple-counting verifier.
//!
//! The tensor tester samples subtensors of side `2^(d-1)` with replacement
//! and rejects when the observed irreducible fraction exceeds
//! `delta = (eps/2)^(2^(d-1))`. It is one-sided: an exactly reducible
//! tensor has observed fraction exactly zero under every seed.

use serde::Serialize;

use crate::caps::Caps;
use crate::combin::{binomial, unrank_combination};
use crate::error::{Error, Result};
use crate::exec;
use crate::matrix::Matrix;
use crate::rat::Rat;
use crate::rng::{sample_subset, SeedStreams};
use crate::tensor::{flatten_rank_le_one, AxisPartition, Tensor};

#[derive(Clone, Debug)]
pub struct TesterConfig {
    pub samples: u64,
    pub seed: u64,
    /// Distance parameter in (0, 1].
    pub epsilon: Rat,
    /// Probe side length; defaults to `2^(d-1)`. Non-default values are
    /// for experimentation and do not carry the lemma-scale guarantee.
    pub side: Option<usize>,
    /// Direct rejection-threshold override, replacing the derived delta.
    pub delta_override: Option<Rat>,
}

impl TesterConfig {
    pub fn new(samples: u64, seed: u64, epsilon: Rat) -> TesterConfig {
        TesterConfig { samples, seed, epsilon, side: None, delta_override: None }
    }

    fn validate(&self) -> Result<()> {
        if self.samples == 0 {
            return Err(Error::Precondition("samples must be >= 1".into()));
        }
        if self.epsilon.is_zero() || self.epsilon.is_negative() || self.epsilon > Rat::one() {
            return Err(Error::Precondition("epsilon must lie in (0, 1]".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Decision {
    Accept,
    Reject,
}

#[derive(Clone, Debug, Serialize)]
pub struct Verdict {
    pub decision: Decision,
    pub observed_bad_fraction: Rat,
    pub threshold: Rat,
    pub samples: u64,
}

impl Verdict {
    fn from_counts(bad: u64, samples: u64, threshold: Rat) -> Verdict {
        let observed = Rat::new(bad as i64, samples as i64);
        let decision = if observed > threshold {
            Decision::Reject
        } else {
            Decision::Accept
        };
        Verdict { decision, observed_bad_fraction: observed, threshold, samples }
    }
}

const SAMPLE_CHUNK: u64 = 512;

fn subtensor_is_reducible(
    t: &Tensor,
    sets: &[Vec<usize>],
    side: usize,
    partitions: &[AxisPartition],
) -> bool {
    let box_dims = vec![side; sets.len()];
    partitions.iter().any(|p| {
        flatten_rank_le_one(&box_dims, p, &|idx: &[usize]| {
            let global: Vec<usize> = idx
                .iter()
                .enumerate()
                .map(|(a, &i)| sets[a][i])
                .collect();
            t.get(&global)
        })
    })
}

/// Samples uniform side-`2^(d-1)` subtensors with replacement and rejects
/// iff the observed irreducible fraction exceeds
/// `delta = (eps/2)^(2^(d-1))`.
pub fn tensor_reducibility_tester(t: &Tensor, config: &TesterConfig) -> Result<Verdict> {
    config.validate()?;
    let d = t.d();
    if d < 2 {
        return Err(Error::Domain("reducibility testing needs d >= 2".into()));
    }
    let side = config.side.unwrap_or(1 << (d - 1));
    if let Some(&short) = t.dims().iter().find(|&&na| na < side) {
        return Err(Error::Precondition(format!(
            "side {side} probes do not fit an axis of length {short}"
        )));
    }
    let delta = config.delta_override.clone().unwrap_or_else(|| {
        (&config.epsilon / &Rat::from_int(2)).pow(1 << (d - 1))
    });
    let partitions = AxisPartition::enumerate(d);
    let streams = SeedStreams::new(config.seed);
    let samples = config.samples;
    let chunks = samples.div_ceil(SAMPLE_CHUNK);
    let bad = exec::map_reduce(
        chunks,
        |chunk| {
            let mut rng = streams.stream(chunk);
            let in_chunk = SAMPLE_CHUNK.min(samples - chunk * SAMPLE_CHUNK);
            let mut bad = 0u64;
            for _ in 0..in_chunk {
                let sets: Vec<Vec<usize>> = t
                    .dims()
                    .iter()
                    .map(|&na| sample_subset(&mut rng, na, side))
                    .collect();
                if !subtensor_is_reducible(t, &sets, side, &partitions) {
                    bad += 1;
                }
            }
            bad
        },
        || 0u64,
        |a, b| a + b,
    );
    Ok(Verdict::from_counts(bad, samples, delta))
}

/// Samples `r x r` submatrices and rejects iff the observed nonsingular
/// fraction exceeds `epsilon`.
pub fn matrix_rank_tester(a: &Matrix, r: usize, config: &TesterConfig) -> Result<Verdict> {
    config.validate()?;
    if r == 0 || r > a.n_rows().min(a.n_cols()) {
        return Err(Error::Precondition(format!(
            "submatrix side {r} out of range for a {}x{} matrix",
            a.n_rows(),
            a.n_cols()
        )));
    }
    let streams = SeedStreams::new(config.seed);
    let samples = config.samples;
    let chunks = samples.div_ceil(SAMPLE_CHUNK);
    let bad = exec::map_reduce(
        chunks,
        |chunk| {
            let mut rng = streams.stream(chunk);
            let in_chunk = SAMPLE_CHUNK.min(samples - chunk * SAMPLE_CHUNK);
            let mut bad = 0u64;
            for _ in 0..in_chunk {
                let rows = sample_subset(&mut rng, a.n_rows(), r);
                let cols = sample_subset(&mut rng, a.n_cols(), r);
                let sub = a.submatrix(&rows, &cols).expect("in range");
                if !sub.det().expect("square").is_zero() {
                    bad += 1;
                }
            }
            bad
        },
        || 0u64,
        |a, b| a + b,
    );
    Ok(Verdict::from_counts(bad, samples, config.epsilon.clone()))
}

/// Exact fraction of irreducible side-`side` subtensors, by full
/// enumeration.
pub fn exact_irreducible_fraction(t: &Tensor, side: usize, caps: &Caps) -> Result<Rat> {
    let d = t.d();
    if d < 2 {
        return Err(Error::Domain("reducibility testing needs d >= 2".into()));
    }
    if let Some(&short) = t.dims().iter().find(|&&na| na < side) {
        return Err(Error::Precondition(format!(
            "side {side} probes do not fit an axis of length {short}"
        )));
    }
    let mut per_axis: Vec<u128> = Vec::with_capacity(d);
    let mut total: u128 = 1;
    for &na in t.dims() {
        let c = binomial(na as u64, side as u64).unwrap_or(u128::MAX);
        per_axis.push(c);
        total = total.saturating_mul(c);
    }
    caps.check_enum(total)?;
    let partitions = AxisPartition::enumerate(d);
    let bad = exec::count_where(total as u64, |flat| {
        let mut rest = flat as u128;
        let sets: Vec<Vec<usize>> = (0..d)
            .map(|a| {
                let idx = rest % per_axis[a];
                rest /= per_axis[a];
                unrank_combination(t.dims()[a], side, idx)
            })
            .collect();
        !subtensor_is_reducible(t, &sets, side, &partitions)
    });
    Ok(Rat::from_big(num_rational::BigRational::new(
        num_bigint::BigInt::from(bad),
        num_bigint::BigInt::from(total),
    )))
}

/// An explicit distribution of a random subset `I` of `{0, .., n-1}`:
/// a list of (subset, probability) atoms.
#[derive(Clone, Debug)]
pub struct SubsetDistribution {
    pub atoms: Vec<(Vec<usize>, Rat)>,
}

impl SubsetDistribution {
    fn validate(&self, n: usize) -> Result<()> {
        if self.atoms.is_empty() {
            return Err(Error::Precondition("distribution has no atoms".into()));
        }
        let mut total = Rat::zero();
        for (set, p) in &self.atoms {
            if p.is_negative() {
                return Err(Error::Precondition("negative probability".into()));
            }
            total = &total + p;
            let mut sorted = set.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.len() != set.len() {
                return Err(Error::Precondition("subset atom has repeats".into()));
            }
            if set.iter().any(|&i| i >= n) {
                return Err(Error::Precondition("subset atom out of range".into()));
            }
        }
        if !total.is_one() {
            return Err(Error::Precondition(format!(
                "probabilities sum to {total}, not 1"
            )));
        }
        Ok(())
    }
}

/// Verifies the tuple-counting bound on an explicit subset distribution:
/// given `Pr[|I| >= (1 - delta) n] >= p`, all but a `2 r delta`-fraction of
/// the r-element subsets `S` must satisfy `Pr[S subset I] >= p / 2`. The
/// hypothesis is checked exactly (violations are a precondition error);
/// the return value is whether the conclusion holds, by exhaustive
/// enumeration of all r-subsets. A `false` is a counterexample to a
/// theorem, i.e. a bug.
pub fn tuple_counting_check(
    dist: &SubsetDistribution,
    n: usize,
    r: usize,
    delta: &Rat,
    p: &Rat,
) -> Result<bool> {
    dist.validate(n)?;
    if r == 0 || r > n {
        return Err(Error::Precondition(format!("r = {r} out of range")));
    }
    if p.is_zero() || p.is_negative() || p > &Rat::one() {
        return Err(Error::Precondition("p must lie in (0, 1]".into()));
    }
    if delta.is_negative() || delta.is_zero() || delta >= &Rat::one() {
        return Err(Error::Precondition("delta must lie in (0, 1)".into()));
    }
    // hypothesis: Pr[|I| >= (1 - delta) n] >= p
    let size_bound = &(&Rat::one() - delta) * &Rat::from_int(n as i64);
    let mut large_mass = Rat::zero();
    for (set, prob) in &dist.atoms {
        if Rat::from_int(set.len() as i64) >= size_bound {
            large_mass = &large_mass + prob;
        }
    }
    if large_mass < *p {
        return Err(Error::Precondition(format!(
            "Pr[|I| >= (1-delta) n] = {large_mass} < p = {p}"
        )));
    }
    let half_p = p / &Rat::from_int(2);
    let total = binomial(n as u64, r as u64).expect("small n");
    let mut bad: u128 = 0;
    for idx in 0..total {
        let s = unrank_combination(n, r, idx);
        let mut mass = Rat::zero();
        for (set, prob) in &dist.atoms {
            if s.iter().all(|i| set.contains(i)) {
                mass = &mass + prob;
            }
        }
        if mass < half_p {
            bad += 1;
        }
    }
    let bad_fraction = Rat::from_big(num_rational::BigRational::new(
        num_bigint::BigInt::from(bad),
        num_bigint::BigInt::from(total),
    ));
    let bound = &(&Rat::from_int(2 * r as i64) * delta).min(Rat::one());
    Ok(bad_fraction <= *bound)
}
