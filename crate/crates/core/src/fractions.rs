//! Combinatorial submatrix statistics: singular fractions, disjoint
//! nonsingular collections, and balanced partitions.

use crate::caps::Caps;
use crate::combin::{binomial, combinations, unrank_combination};
use crate::error::{Error, Result};
use crate::exec;
use crate::matrix::Matrix;
use crate::rat::Rat;
use crate::rng::{sample_partition, sample_subset, SeedStreams};
use crate::stats::{binomial_ci, ConfidenceLevel};

use num_bigint::BigInt;
use num_rational::BigRational;

/// How many samples each verification block uses in sampled mode, and the
/// stream chunk size for parallel sampling.
const SAMPLE_CHUNK: u64 = 1024;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FractionMode {
    Exact,
    Sampled { samples: u64, seed: u64 },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubmatrixStats {
    pub r: usize,
    /// Exact mode: `C(rows, r) * C(cols, r)`. Sampled mode: the sample count.
    pub total: u128,
    pub nonsingular: u128,
    pub mode: FractionMode,
}

impl SubmatrixStats {
    pub fn nonsingular_fraction(&self) -> Rat {
        big_ratio(self.nonsingular, self.total)
    }

    pub fn singular_fraction(&self) -> Rat {
        &Rat::one() - &self.nonsingular_fraction()
    }

    /// Wilson interval for the nonsingular fraction; sampled mode only.
    pub fn confidence_interval(&self, level: ConfidenceLevel) -> Option<(f64, f64)> {
        match self.mode {
            FractionMode::Exact => None,
            FractionMode::Sampled { samples, .. } => {
                Some(binomial_ci(self.nonsingular as u64, samples, level))
            }
        }
    }
}

fn big_ratio(num: u128, den: u128) -> Rat {
    assert!(den > 0);
    Rat::from_big(BigRational::new(BigInt::from(num), BigInt::from(den)))
}

/// Exact count of nonsingular `r x r` submatrices, as (nonsingular, total).
pub fn count_nonsingular(m: &Matrix, r: usize, caps: &Caps) -> Result<(u128, u128)> {
    let (rows, cols) = (m.n_rows(), m.n_cols());
    if r == 0 || r > rows.min(cols) {
        return Err(Error::Precondition(format!(
            "submatrix side {r} out of range for a {rows}x{cols} matrix"
        )));
    }
    let row_choices = binomial(rows as u64, r as u64)
        .ok_or(Error::CapExceeded { needed: u128::MAX, cap: caps.enum_cap })?;
    let col_choices = binomial(cols as u64, r as u64)
        .ok_or(Error::CapExceeded { needed: u128::MAX, cap: caps.enum_cap })?;
    let total = row_choices
        .checked_mul(col_choices)
        .ok_or(Error::CapExceeded { needed: u128::MAX, cap: caps.enum_cap })?;
    caps.check_enum(total)?;
    let nonsingular = exec::count_where(total as u64, |idx| {
        let ri = unrank_combination(rows, r, idx as u128 / col_choices);
        let ci = unrank_combination(cols, r, idx as u128 % col_choices);
        submatrix_nonsingular(m, &ri, &ci)
    });
    Ok((nonsingular as u128, total))
}

fn submatrix_nonsingular(m: &Matrix, rows: &[usize], cols: &[usize]) -> bool {
    let sub = m.submatrix(rows, cols).expect("indices in range");
    !sub.det().expect("square").is_zero()
}

/// The fraction of `r x r` submatrices of `m` that are nonsingular, exactly
/// by full enumeration or estimated by seeded sampling with replacement.
pub fn singular_fraction(
    m: &Matrix,
    r: usize,
    mode: FractionMode,
    caps: &Caps,
) -> Result<SubmatrixStats> {
    match mode {
        FractionMode::Exact => {
            let (nonsingular, total) = count_nonsingular(m, r, caps)?;
            Ok(SubmatrixStats { r, total, nonsingular, mode })
        }
        FractionMode::Sampled { samples, seed } => {
            let (rows, cols) = (m.n_rows(), m.n_cols());
            if r == 0 || r > rows.min(cols) {
                return Err(Error::Precondition(format!(
                    "submatrix side {r} out of range for a {rows}x{cols} matrix"
                )));
            }
            if samples == 0 {
                return Err(Error::Precondition("samples must be >= 1".into()));
            }
            let hits = sampled_nonsingular_count(m, r, samples, seed);
            Ok(SubmatrixStats {
                r,
                total: samples as u128,
                nonsingular: hits as u128,
                mode,
            })
        }
    }
}

/// Sampled count of nonsingular draws. One ChaCha stream per fixed-size
/// block of samples, so the result is independent of the thread count.
fn sampled_nonsingular_count(m: &Matrix, r: usize, samples: u64, seed: u64) -> u64 {
    let streams = SeedStreams::new(seed);
    let chunks = samples.div_ceil(SAMPLE_CHUNK);
    exec::map_reduce(
        chunks,
        |chunk| {
            let mut rng = streams.stream(chunk);
            let in_chunk = SAMPLE_CHUNK.min(samples - chunk * SAMPLE_CHUNK);
            let mut hits = 0u64;
            for _ in 0..in_chunk {
                let ri = sample_subset(&mut rng, m.n_rows(), r);
                let ci = sample_subset(&mut rng, m.n_cols(), r);
                if submatrix_nonsingular(m, &ri, &ci) {
                    hits += 1;
                }
            }
            hits
        },
        || 0u64,
        |a, b| a + b,
    )
}

/// Greedy left-to-right scan over column d-tuples in lexicographic order,
/// collecting pairwise column-disjoint nonsingular `d x d` submatrices.
/// Returns the size of the (maximal, not maximum) collection.
pub fn count_disjoint_nonsingular(m: &Matrix, d: usize) -> Result<usize> {
    if m.n_rows() != d {
        return Err(Error::Precondition(format!(
            "matrix must have exactly {d} rows, has {}",
            m.n_rows()
        )));
    }
    if d == 0 || d > m.n_cols() {
        return Ok(0);
    }
    let all_rows: Vec<usize> = (0..d).collect();
    let mut used = vec![false; m.n_cols()];
    let mut count = 0;
    for tuple in combinations(m.n_cols(), d) {
        if tuple.iter().any(|&c| used[c]) {
            continue;
        }
        if submatrix_nonsingular(m, &all_rows, &tuple) {
            for &c in &tuple {
                used[c] = true;
            }
            count += 1;
        }
    }
    Ok(count)
}

/// Verification outcome for one block of a candidate partition.
#[derive(Clone, Debug)]
pub struct BlockCheck {
    pub block: (usize, usize),
    pub observed: Rat,
    pub ok: bool,
}

/// Searches for an equal-size partition `I_1, .., I_q` of the index set such
/// that every block `M[I_i, I_j]` has a nonsingular `r x r` fraction
/// strictly above `eps/2`. Rejection sampling over seeded random partitions,
/// up to `max_tries`.
///
/// Blocks are verified exactly when `C(n/q, r)^2` is under the enumeration
/// cap. Otherwise each block is sampled (4096 draws) and accepted only when
/// the observed fraction exceeds `eps/2` by the one-sided Hoeffding margin
/// for confidence 99.9%, so false accepts have probability below 1e-3 per
/// block.
pub fn balanced_partition(
    m: &Matrix,
    q: usize,
    r: usize,
    eps: &Rat,
    seed: u64,
    max_tries: u64,
    caps: &Caps,
) -> Result<Vec<Vec<usize>>> {
    let n = m.n_rows();
    if !m.is_square() {
        return Err(Error::NonSquare { rows: m.n_rows(), cols: m.n_cols() });
    }
    if q == 0 || n % q != 0 {
        return Err(Error::Precondition(format!("q={q} must divide n={n}")));
    }
    if r > n / q {
        return Err(Error::Precondition(format!(
            "r={r} exceeds block side {}",
            n / q
        )));
    }
    let threshold = eps / &Rat::from_int(2);
    let streams = SeedStreams::new(seed);
    let mut last_checks: Vec<BlockCheck> = Vec::new();
    for t in 0..max_tries {
        let mut rng = streams.stream(t);
        let parts = sample_partition(&mut rng, n, q);
        let mut ok = true;
        last_checks.clear();
        'blocks: for i in 0..q {
            for j in 0..q {
                let block = m.submatrix(&parts[i], &parts[j])?;
                let (passed, observed) =
                    block_above_threshold(&block, r, &threshold, caps, &mut rng)?;
                last_checks.push(BlockCheck { block: (i, j), observed, ok: passed });
                if !passed {
                    ok = false;
                    break 'blocks;
                }
            }
        }
        if ok {
            return Ok(parts);
        }
    }
    let detail = last_checks
        .iter()
        .map(|c| format!("M[I{},I{}]={}", c.block.0, c.block.1, c.observed))
        .collect::<Vec<_>>()
        .join(", ");
    Err(Error::BalancedPartitionFailed { tries: max_tries, detail })
}

fn block_above_threshold(
    block: &Matrix,
    r: usize,
    threshold: &Rat,
    caps: &Caps,
    rng: &mut rand_chacha::ChaCha8Rng,
) -> Result<(bool, Rat)> {
    let side = block.n_rows().min(block.n_cols());
    let exact_size = binomial(side as u64, r as u64)
        .and_then(|c| c.checked_mul(c))
        .filter(|&t| t <= caps.enum_cap);
    if exact_size.is_some() {
        let (nonsingular, total) = count_nonsingular(block, r, caps)?;
        let observed = big_ratio(nonsingular, total);
        Ok((observed > *threshold, observed))
    } else {
        const SAMPLES: u64 = 4096;
        // ln(1000) / (2 * 4096) under the square root
        let margin = (1000f64.ln() / (2.0 * SAMPLES as f64)).sqrt();
        let mut hits = 0u64;
        for _ in 0..SAMPLES {
            let ri = sample_subset(rng, block.n_rows(), r);
            let ci = sample_subset(rng, block.n_cols(), r);
            if submatrix_nonsingular(block, &ri, &ci) {
                hits += 1;
            }
        }
        let observed = big_ratio(hits as u128, SAMPLES as u128);
        let passed = observed.to_f64() > threshold.to_f64() + margin;
        Ok((passed, observed))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::rat;
    use crate::scalar::Scalar;

    fn caps() -> Caps {
        Caps::default()
    }

    #[test]
    fn identity4_two_by_two() {
        // nonsingular iff row set = col set: 6 of 36
        let stats =
            singular_fraction(&Matrix::identity(4), 2, FractionMode::Exact, &caps()).unwrap();
        assert_eq!((stats.nonsingular, stats.total), (6, 36));
        assert_eq!(stats.singular_fraction(), rat(5, 6));
    }

    #[test]
    fn zero_matrix_ones() {
        let stats =
            singular_fraction(&Matrix::zeros(4, 4), 1, FractionMode::Exact, &caps()).unwrap();
        assert_eq!((stats.nonsingular, stats.total), (0, 16));
    }

    #[test]
    fn sampled_mode_is_deterministic() {
        let m = Matrix::identity(6);
        let mode = FractionMode::Sampled { samples: 500, seed: 9 };
        let a = singular_fraction(&m, 2, mode, &caps()).unwrap();
        let b = singular_fraction(&m, 2, mode, &caps()).unwrap();
        assert_eq!(a, b);
        assert!(a.confidence_interval(ConfidenceLevel::P99).is_some());
    }

    #[test]
    fn cap_is_enforced() {
        let tight = Caps { enum_cap: 10, ..Caps::default() };
        let err = singular_fraction(&Matrix::identity(5), 2, FractionMode::Exact, &tight);
        assert!(matches!(err, Err(Error::CapExceeded { .. })));
    }

    #[test]
    fn disjoint_scan_examples() {
        let m = Matrix::from_i64(&[&[1, 0, 1, 0], &[0, 1, 0, 1]]);
        assert_eq!(count_disjoint_nonsingular(&m, 2).unwrap(), 2);
        let z = Matrix::zeros(2, 6);
        assert_eq!(count_disjoint_nonsingular(&z, 2).unwrap(), 0);
        let m = Matrix::from_i64(&[&[1, 0, 0, 0, 0, 0], &[0, 1, 0, 0, 0, 0]]);
        assert_eq!(count_disjoint_nonsingular(&m, 2).unwrap(), 1);
        assert!(count_disjoint_nonsingular(&Matrix::zeros(3, 3), 2).is_err());
    }

    #[test]
    fn balanced_partition_all_ones() {
        // every entry nonzero: any partition works for r=1, eps=1/2
        let m = Matrix::from_fn(8, 8, |_, _| Scalar::from_int(1));
        let parts = balanced_partition(&m, 2, 1, &rat(1, 2), 3, 10, &caps()).unwrap();
        assert_eq!(parts.len(), 2);
        assert_eq!(parts[0].len(), 4);
    }

    #[test]
    fn balanced_partition_block_diagonal() {
        // two all-ones blocks on the diagonal; a balanced partition with
        // every block above 1/8 exists and the verifier must agree exactly
        let m = Matrix::from_fn(8, 8, |i, j| {
            if (i < 4) == (j < 4) {
                Scalar::from_int(1)
            } else {
                Scalar::zero()
            }
        });
        let eps = rat(1, 4);
        let parts = balanced_partition(&m, 2, 1, &eps, 0, 200, &caps()).unwrap();
        let threshold = &eps / &Rat::from_int(2);
        for i in 0..2 {
            for j in 0..2 {
                let block = m.submatrix(&parts[i], &parts[j]).unwrap();
                let stats =
                    singular_fraction(&block, 1, FractionMode::Exact, &caps()).unwrap();
                assert!(stats.nonsingular_fraction() > threshold);
            }
        }
    }

    #[test]
    fn balanced_partition_zero_matrix_fails() {
        let err = balanced_partition(
            &Matrix::zeros(8, 8),
            2,
            1,
            &rat(1, 2),
            0,
            5,
            &caps(),
        );
        assert!(matches!(err, Err(Error::BalancedPartitionFailed { .. })));
    }
}
