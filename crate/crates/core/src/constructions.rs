//! Generators for the concrete objects used across tests, experiments and
//! the CLI: the product-difference polynomial family, corner matrices,
//! seeded low-rank matrices and rank-1 tensors with controlled corruption,
//! and power sums.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::anticonc::PolynomialSpec;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::SeedStreams;
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// The degree-d polynomial `L_1 .. L_d - L_{d+1} .. L_{2d}` built from `2d`
/// disjoint blocks of variables, each of size exactly `2 * floor(n / (4d))`,
/// taken from the lowest indices; leftover variables are unused by the
/// polynomial but still belong to the probability space.
pub fn make_counterexample(n: usize, d: usize) -> Result<PolynomialSpec> {
    if d == 0 {
        return Err(Error::Precondition("degree must be >= 1".into()));
    }
    let part = 2 * (n / (4 * d));
    if part == 0 {
        return Err(Error::Precondition(format!(
            "n = {n} too small: need n >= 4d = {}",
            4 * d
        )));
    }
    let parts: Vec<Vec<usize>> = (0..2 * d)
        .map(|j| (j * part..(j + 1) * part).collect())
        .collect();
    let mut f = PolynomialSpec::new(n);
    // expand each product of linear forms into monomials
    for (block, sign) in [(0..d, 1i64), (d..2 * d, -1i64)] {
        let blocks: Vec<&Vec<usize>> = block.map(|j| &parts[j]).collect();
        let mut choice = vec![0usize; d];
        'combos: loop {
            let exps: Vec<(usize, u32)> = blocks
                .iter()
                .zip(&choice)
                .map(|(b, &c)| (b[c], 1))
                .collect();
            f.add_term(&exps, Scalar::from_int(sign))?;
            let mut axis = d;
            while axis > 0 {
                axis -= 1;
                choice[axis] += 1;
                if choice[axis] < part {
                    continue 'combos;
                }
                choice[axis] = 0;
            }
            break;
        }
    }
    Ok(f)
}

/// The variable blocks of [`make_counterexample`], for callers that work
/// with the linear factors directly.
pub fn counterexample_parts(n: usize, d: usize) -> Result<Vec<Vec<usize>>> {
    if d == 0 {
        return Err(Error::Precondition("degree must be >= 1".into()));
    }
    let part = 2 * (n / (4 * d));
    if part == 0 {
        return Err(Error::Precondition(format!(
            "n = {n} too small: need n >= 4d = {}",
            4 * d
        )));
    }
    Ok((0..2 * d)
        .map(|j| (j * part..(j + 1) * part).collect())
        .collect())
}

/// Binary symmetric matrix with `a_ij = 1` iff `j >= n - ell + i` or
/// `i >= n - ell + j` (1-based), i.e. triangular chunks in the top-right
/// and bottom-left corners.
pub fn make_corner_matrix(n: usize, ell: usize) -> Result<Matrix> {
    if ell > n {
        return Err(Error::Precondition(format!("ell = {ell} exceeds n = {n}")));
    }
    Ok(Matrix::from_fn(n, n, |i, j| {
        // 1-based condition j+1 >= n - ell + i+1, i.e. j >= n - ell + i
        if j + ell >= n + i || i + ell >= n + j {
            Scalar::from_int(1)
        } else {
            Scalar::zero()
        }
    }))
}

fn small_nonzero(rng: &mut rand_chacha::ChaCha8Rng) -> i64 {
    let v = rng.gen_range(1..=3i64);
    if rng.gen::<bool>() {
        v
    } else {
        -v
    }
}

fn small_any(rng: &mut rand_chacha::ChaCha8Rng) -> i64 {
    rng.gen_range(-3..=3i64)
}

/// Sum of `r` random rank-1 outer products with small integer entries,
/// optionally symmetric (`u u^T` summands), then `corrupt_count` seeded
/// entry overwrites. Corruption sites are sampled without replacement and
/// each overwrite changes the value, so for non-symmetric output
/// `corrupt_count` equals the Hamming distance from the clean matrix; for
/// symmetric output sites are mirrored (diagonal sites change one entry,
/// off-diagonal sites change two).
pub fn make_random_low_rank(
    n: usize,
    r: usize,
    seed: u64,
    corrupt_count: usize,
    symmetric: bool,
) -> Result<Matrix> {
    if r > n {
        return Err(Error::Precondition(format!("r = {r} exceeds n = {n}")));
    }
    let mut rng = SeedStreams::new(seed).stream(0);
    let mut m = Matrix::zeros(n, n);
    for _ in 0..r {
        let u: Vec<i64> = (0..n).map(|_| small_nonzero(&mut rng)).collect();
        let v: Vec<i64> = if symmetric {
            u.clone()
        } else {
            (0..n).map(|_| small_nonzero(&mut rng)).collect()
        };
        for i in 0..n {
            for j in 0..n {
                let cur = m.get(i, j) + &Scalar::from_int(u[i] * v[j]);
                m.set(i, j, cur);
            }
        }
    }
    // corruption sites: cells, or upper-triangle pairs when symmetric
    let mut sites: Vec<(usize, usize)> = if symmetric {
        (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect()
    } else {
        (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).collect()
    };
    if corrupt_count > sites.len() {
        return Err(Error::Precondition(format!(
            "corrupt_count = {corrupt_count} exceeds the {} available sites",
            sites.len()
        )));
    }
    sites.shuffle(&mut rng);
    for &(i, j) in sites.iter().take(corrupt_count) {
        let old = m.get(i, j).clone();
        let new = loop {
            let v = Scalar::from_int(small_any(&mut rng));
            if v != old {
                break v;
            }
        };
        m.set(i, j, new.clone());
        if symmetric {
            m.set(j, i, new);
        }
    }
    Ok(m)
}

/// Rank-1 tensor `u_1 (x) .. (x) u_d` with small nonzero integer entries,
/// then `corrupt_count` seeded corruptions (distinct cells, new value never
/// equal to the old one, so corrupt_count is the exact Hamming distance
/// from the clean tensor).
pub fn make_random_rank1_tensor(
    dims: &[usize],
    seed: u64,
    corrupt_count: usize,
) -> Result<Tensor> {
    if dims.is_empty() || dims.iter().any(|&d| d == 0) {
        return Err(Error::Precondition("dims must be nonempty and positive".into()));
    }
    let mut rng = SeedStreams::new(seed).stream(0);
    let factors: Vec<Vec<i64>> = dims
        .iter()
        .map(|&m| (0..m).map(|_| small_nonzero(&mut rng)).collect())
        .collect();
    let mut t = Tensor::from_fn(dims.to_vec(), |idx| {
        let prod: i64 = idx.iter().zip(&factors).map(|(&i, f)| f[i]).product();
        Scalar::from_int(prod)
    });
    let len = t.len();
    if corrupt_count > len {
        return Err(Error::Precondition(format!(
            "corrupt_count = {corrupt_count} exceeds {len} cells"
        )));
    }
    let mut cells: Vec<usize> = (0..len).collect();
    cells.shuffle(&mut rng);
    let mut entries = t.entries().to_vec();
    for &flat in cells.iter().take(corrupt_count) {
        let old = entries[flat].clone();
        entries[flat] = loop {
            let v = Scalar::from_int(small_any(&mut rng));
            if v != old {
                break v;
            }
        };
    }
    t = Tensor::from_entries(dims.to_vec(), entries)?;
    Ok(t)
}

/// Full multinomial expansion of `(x_1 + .. + x_n)^d`.
pub fn make_power_sum(n: usize, d: u32) -> Result<PolynomialSpec> {
    if n == 0 {
        return Err(Error::Precondition("need at least one variable".into()));
    }
    let mut f = PolynomialSpec::new(n);
    // iterate over exponent vectors summing to d, with multinomial
    // coefficients d! / prod(e_i!)
    fn rec(
        f: &mut PolynomialSpec,
        exps: &mut Vec<(usize, u32)>,
        var: usize,
        n: usize,
        left: u32,
        coef: u128,
    ) -> Result<()> {
        if left == 0 {
            let c = i64::try_from(coef)
                .map_err(|_| Error::Precondition("multinomial coefficient overflow".into()))?;
            f.add_term(exps, Scalar::from_int(c))?;
            return Ok(());
        }
        if var == n {
            return Ok(());
        }
        if n - var == 1 {
            // last variable takes everything; multiply by C(left, left) = 1
            exps.push((var, left));
            let c = i64::try_from(coef)
                .map_err(|_| Error::Precondition("multinomial coefficient overflow".into()))?;
            f.add_term(exps, Scalar::from_int(c))?;
            exps.pop();
            return Ok(());
        }
        let mut choose: u128 = 1; // C(left, e) built incrementally
        for e in 0..=left {
            if e > 0 {
                choose = choose * (left - e + 1) as u128 / e as u128;
            }
            if e == 0 {
                rec(f, exps, var + 1, n, left, coef)?;
            } else {
                exps.push((var, e));
                rec(f, exps, var + 1, n, left - e, coef * choose)?;
                exps.pop();
            }
        }
        Ok(())
    }
    let mut exps = Vec::new();
    rec(&mut f, &mut exps, 0, n, d, 1)?;
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::anticonc::{exact_distribution, RandomModel};
    use crate::caps::Caps;

    #[test]
    fn counterexample_term_counts() {
        // n=8, d=2: parts of size 2, 2 * 2^2 = 8 monomials of degree 2
        let f = make_counterexample(8, 2).unwrap();
        assert_eq!(f.n_terms(), 8);
        assert_eq!(f.degree(), 2);
        assert!(f.terms().all(|(_, c)| {
            *c == Scalar::from_int(1) || *c == Scalar::from_int(-1)
        }));
        // n=16, d=2: parts of size 4, 2 * 16 = 32 monomials
        let f = make_counterexample(16, 2).unwrap();
        assert_eq!(f.n_terms(), 32);
        // n=24, d=3: parts of size 2*floor(24/12) = 4, so 2 * 4^3 = 128
        let f = make_counterexample(24, 3).unwrap();
        assert_eq!(f.degree(), 3);
        assert_eq!(f.n_terms(), 128);
        assert!(make_counterexample(7, 2).is_err());
    }

    #[test]
    fn counterexample_vanishes_with_outer_factors() {
        // any assignment with L_1 = 0 and L_4 = 0 gives f = 0
        let f = make_counterexample(8, 2).unwrap();
        let parts = counterexample_parts(8, 2).unwrap();
        let mut point: Vec<Scalar> = vec![Scalar::from_int(1); 8];
        // parts have size 2: set one +1 and one -1 in L_1 and L_4
        point[parts[0][0]] = Scalar::from_int(1);
        point[parts[0][1]] = Scalar::from_int(-1);
        point[parts[3][0]] = Scalar::from_int(1);
        point[parts[3][1]] = Scalar::from_int(-1);
        assert!(f.eval(&point).is_zero());
    }

    #[test]
    fn corner_matrix_counts() {
        let m = make_corner_matrix(8, 2).unwrap();
        assert_eq!(m.nnz(), 6);
        assert!(m.is_symmetric());
        let z = make_corner_matrix(5, 0).unwrap();
        assert_eq!(z.nnz(), 0);
        for n in [3, 6, 9] {
            for ell in 0..=n {
                assert!(make_corner_matrix(n, ell).unwrap().is_symmetric());
            }
        }
    }

    #[test]
    fn low_rank_generator() {
        let m = make_random_low_rank(6, 2, 7, 0, false).unwrap();
        assert!(m.rank() <= 2);
        let s = make_random_low_rank(6, 2, 7, 3, true).unwrap();
        assert!(s.is_symmetric());
        // determinism
        assert_eq!(
            make_random_low_rank(6, 2, 7, 3, true).unwrap(),
            s
        );
        // a corruption off the rank-1 surface creates a nonsingular 2x2
        let c = make_random_low_rank(6, 1, 3, 1, false).unwrap();
        let clean = make_random_low_rank(6, 1, 3, 0, false).unwrap();
        assert_eq!(c.hamming(&clean), 1);
        assert!(c.rank() > 1);
    }

    #[test]
    fn rank1_tensor_generator() {
        let t = make_random_rank1_tensor(&[3, 3, 3], 5, 0).unwrap();
        assert!(t.is_reducible().unwrap().is_some());
        assert_eq!(t.nnz(), 27); // nonzero factors everywhere
        let c = make_random_rank1_tensor(&[3, 3, 3], 5, 2).unwrap();
        assert_eq!(c.hamming(&t), 2);
    }

    #[test]
    fn power_sum_expansion() {
        // (x1 + x2)^2 = x1^2 + 2 x1 x2 + x2^2
        let f = make_power_sum(2, 2).unwrap();
        assert_eq!(f.n_terms(), 3);
        let two = Scalar::from_int(2);
        let point = vec![Scalar::one(), Scalar::one()];
        assert_eq!(f.eval(&point), Scalar::from_int(4));
        assert!(f.terms().any(|(_, c)| *c == two));
        // d = 1 is the linear all-ones form
        let f = make_power_sum(5, 1).unwrap();
        assert_eq!(f.n_terms(), 5);
        assert_eq!(f.degree(), 1);
        // sanity against brute-force evaluation of (x1+x2+x3)^3
        let f = make_power_sum(3, 3).unwrap();
        let d = exact_distribution(&f, &RandomModel::Rademacher, &Caps::default()).unwrap();
        assert_eq!(d[&Scalar::from_int(27)], crate::rat::rat(1, 8));
        assert_eq!(d[&Scalar::from_int(-1)], crate::rat::rat(3, 8));
    }
}
