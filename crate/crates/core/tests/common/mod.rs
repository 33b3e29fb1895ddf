//! Independent oracles for the integration suites. These deliberately use
//! different algorithms than the library (cofactor expansion instead of
//! fraction-free elimination, largest-nonsingular-minor rank instead of
//! pivot counting) so that agreement is a genuine cross-check.

use smallball_core::combin::combinations;
use smallball_core::matrix::Matrix;
use smallball_core::scalar::Scalar;
use smallball_core::tensor::{AxisPartition, Tensor};

/// Determinant by cofactor expansion along the first row.
pub fn naive_det(m: &Matrix) -> Scalar {
    assert!(m.is_square());
    let n = m.n_rows();
    if n == 0 {
        return Scalar::one();
    }
    if n == 1 {
        return m.get(0, 0).clone();
    }
    let mut acc = Scalar::zero();
    for j in 0..n {
        if m.get(0, j).is_zero() {
            continue;
        }
        let rows: Vec<usize> = (1..n).collect();
        let cols: Vec<usize> = (0..n).filter(|&c| c != j).collect();
        let minor = naive_det(&m.submatrix(&rows, &cols).unwrap());
        let signed = if j % 2 == 0 { minor } else { -minor };
        acc = &acc + &(m.get(0, j) * &signed);
    }
    acc
}

/// Rank as the size of the largest nonsingular square minor.
pub fn naive_rank(m: &Matrix) -> usize {
    let maxk = m.n_rows().min(m.n_cols());
    for k in (1..=maxk).rev() {
        for rows in combinations(m.n_rows(), k) {
            for cols in combinations(m.n_cols(), k) {
                if !naive_det(&m.submatrix(&rows, &cols).unwrap()).is_zero() {
                    return k;
                }
            }
        }
    }
    0
}

/// Reducibility through the naive rank of materialized flattenings.
pub fn naive_is_reducible(t: &Tensor) -> bool {
    AxisPartition::enumerate(t.d())
        .iter()
        .any(|p| naive_rank(&t.flatten(p).unwrap()) <= 1)
}

/// Deterministic small integer matrix from a seed counter.
pub fn seeded_matrix(n: usize, m: usize, seed: u64) -> Matrix {
    // xorshift-style mixing; entries in -3..=3
    let mut state = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(1);
    let mut next = move || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state % 7) as i64 - 3
    };
    Matrix::from_fn(n, m, |_, _| Scalar::from_int(next()))
}
