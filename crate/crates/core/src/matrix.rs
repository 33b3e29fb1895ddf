//! Dense exact matrices over Gaussian rationals.
//!
//! Determinants use fraction-free (Bareiss-style) elimination; rank and
//! solving use exact Gaussian elimination. Nothing here ever rounds.

use serde::ser::SerializeStruct;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<Scalar>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Matrix {
        Matrix {
            rows,
            cols,
            data: vec![Scalar::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Matrix {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.set(i, i, Scalar::one());
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Scalar) -> Matrix {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    pub fn from_rows(rows: Vec<Vec<Scalar>>) -> Matrix {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Matrix {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        }
    }

    /// Convenience for small integer test matrices.
    pub fn from_i64(rows: &[&[i64]]) -> Matrix {
        Matrix::from_rows(
            rows.iter()
                .map(|r| r.iter().map(|&x| Scalar::from_int(x)).collect())
                .collect(),
        )
    }

    pub fn n_rows(&self) -> usize {
        self.rows
    }

    pub fn n_cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &Scalar {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Scalar) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[Scalar] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn entries(&self) -> &[Scalar] {
        &self.data
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self.get(j, i).clone())
    }

    pub fn is_symmetric(&self) -> bool {
        if !self.is_square() {
            return false;
        }
        for i in 0..self.rows {
            for j in i + 1..self.cols {
                if self.get(i, j) != self.get(j, i) {
                    return false;
                }
            }
        }
        true
    }

    /// Number of nonzero entries.
    pub fn nnz(&self) -> u64 {
        self.data.iter().filter(|e| !e.is_zero()).count() as u64
    }

    /// Hamming distance in entries.
    pub fn hamming(&self, other: &Matrix) -> u64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .filter(|(a, b)| a != b)
            .count() as u64
    }

    pub fn matmul(&self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.cols, rhs.rows, "matmul shape mismatch");
        Matrix::from_fn(self.rows, rhs.cols, |i, j| {
            let mut acc = Scalar::zero();
            for k in 0..self.cols {
                if !self.get(i, k).is_zero() && !rhs.get(k, j).is_zero() {
                    acc = &acc + &(self.get(i, k) * rhs.get(k, j));
                }
            }
            acc
        })
    }

    /// `A[I, J]`: the submatrix of the rows in `rows` and columns in `cols`,
    /// preserving the given index order.
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> Result<Matrix> {
        for &i in rows {
            if i >= self.rows {
                return Err(Error::IndexOutOfRange { index: i, limit: self.rows });
            }
        }
        for &j in cols {
            if j >= self.cols {
                return Err(Error::IndexOutOfRange { index: j, limit: self.cols });
            }
        }
        Ok(Matrix::from_fn(rows.len(), cols.len(), |i, j| {
            self.get(rows[i], cols[j]).clone()
        }))
    }

    /// Exact determinant by fraction-free elimination.
    pub fn det(&self) -> Result<Scalar> {
        if !self.is_square() {
            return Err(Error::NonSquare { rows: self.rows, cols: self.cols });
        }
        let n = self.rows;
        if n == 0 {
            return Ok(Scalar::one());
        }
        let mut w = self.clone();
        let mut sign_flip = false;
        let mut prev = Scalar::one();
        for p in 0..n {
            let pivot_row = (p..n).find(|&r| !w.get(r, p).is_zero());
            let Some(r) = pivot_row else {
                return Ok(Scalar::zero());
            };
            if r != p {
                for j in 0..n {
                    let a = w.get(p, j).clone();
                    let b = w.get(r, j).clone();
                    w.set(p, j, b);
                    w.set(r, j, a);
                }
                sign_flip = !sign_flip;
            }
            if p == n - 1 {
                break;
            }
            let pivot = w.get(p, p).clone();
            for i in p + 1..n {
                for j in p + 1..n {
                    let v = &(&(w.get(i, j) * &pivot) - &(w.get(i, p) * w.get(p, j))) / &prev;
                    w.set(i, j, v);
                }
                w.set(i, p, Scalar::zero());
            }
            prev = pivot;
        }
        let d = w.get(n - 1, n - 1).clone();
        Ok(if sign_flip { -d } else { d })
    }

    pub fn is_nonsingular(&self) -> Result<bool> {
        Ok(!self.det()?.is_zero())
    }

    /// Rank by exact elimination, stopping once `cap` pivots are found.
    /// Returns `min(rank, cap)`.
    pub fn rank_capped(&self, cap: usize) -> usize {
        let mut w = self.clone();
        let (rows, cols) = (w.rows, w.cols);
        let mut r = 0;
        for c in 0..cols {
            if r == rows || r >= cap {
                break;
            }
            let Some(pr) = (r..rows).find(|&i| !w.get(i, c).is_zero()) else {
                continue;
            };
            if pr != r {
                for j in c..cols {
                    let a = w.get(r, j).clone();
                    let b = w.get(pr, j).clone();
                    w.set(r, j, b);
                    w.set(pr, j, a);
                }
            }
            let pivot = w.get(r, c).clone();
            for i in r + 1..rows {
                if w.get(i, c).is_zero() {
                    continue;
                }
                let factor = &(w.get(i, c) / &pivot);
                for j in c + 1..cols {
                    let v = &(w.get(i, j) - &(factor * w.get(r, j)));
                    w.set(i, j, v.clone());
                }
                w.set(i, c, Scalar::zero());
            }
            r += 1;
        }
        r
    }

    pub fn rank(&self) -> usize {
        self.rank_capped(self.rows.min(self.cols))
    }

    pub fn rank_at_most(&self, k: usize) -> bool {
        self.rank_capped(k + 1) <= k
    }

    /// Exact inverse; `None` when singular.
    pub fn inverse(&self) -> Option<Matrix> {
        assert!(self.is_square());
        let n = self.rows;
        let mut w = self.clone();
        let mut inv = Matrix::identity(n);
        for c in 0..n {
            let pr = (c..n).find(|&i| !w.get(i, c).is_zero())?;
            if pr != c {
                for j in 0..n {
                    let (a, b) = (w.get(c, j).clone(), w.get(pr, j).clone());
                    w.set(c, j, b);
                    w.set(pr, j, a);
                    let (a, b) = (inv.get(c, j).clone(), inv.get(pr, j).clone());
                    inv.set(c, j, b);
                    inv.set(pr, j, a);
                }
            }
            let pivot = w.get(c, c).clone();
            let pivot_inv = pivot.recip();
            for j in 0..n {
                let a = w.get(c, j) * &pivot_inv;
                w.set(c, j, a);
                let b = inv.get(c, j) * &pivot_inv;
                inv.set(c, j, b);
            }
            for i in 0..n {
                if i == c || w.get(i, c).is_zero() {
                    continue;
                }
                let factor = w.get(i, c).clone();
                for j in 0..n {
                    let a = &(w.get(i, j) - &(&factor * w.get(c, j)));
                    w.set(i, j, a.clone());
                    let b = &(inv.get(i, j) - &(&factor * inv.get(c, j)));
                    inv.set(i, j, b.clone());
                }
            }
        }
        Some(inv)
    }

    /// Solve `self * x = b` exactly; free variables are set to zero.
    /// `None` when inconsistent.
    pub fn solve(&self, b: &[Scalar]) -> Option<Vec<Scalar>> {
        assert_eq!(b.len(), self.rows);
        let (rows, cols) = (self.rows, self.cols);
        let mut w = self.clone();
        let mut rhs: Vec<Scalar> = b.to_vec();
        let mut pivot_col_of_row: Vec<usize> = Vec::new();
        let mut r = 0;
        for c in 0..cols {
            if r == rows {
                break;
            }
            let Some(pr) = (r..rows).find(|&i| !w.get(i, c).is_zero()) else {
                continue;
            };
            if pr != r {
                for j in c..cols {
                    let (a, b2) = (w.get(r, j).clone(), w.get(pr, j).clone());
                    w.set(r, j, b2);
                    w.set(pr, j, a);
                }
                rhs.swap(r, pr);
            }
            let pivot = w.get(r, c).clone();
            for i in r + 1..rows {
                if w.get(i, c).is_zero() {
                    continue;
                }
                let factor = &(w.get(i, c) / &pivot);
                for j in c..cols {
                    let v = &(w.get(i, j) - &(factor * w.get(r, j)));
                    w.set(i, j, v.clone());
                }
                let v = &rhs[i] - &(factor * &rhs[r]);
                rhs[i] = v;
            }
            pivot_col_of_row.push(c);
            r += 1;
        }
        // consistency of the zero rows
        for i in r..rows {
            if !rhs[i].is_zero() {
                return None;
            }
        }
        // back substitution
        let mut x = vec![Scalar::zero(); cols];
        for row in (0..r).rev() {
            let c = pivot_col_of_row[row];
            let mut acc = rhs[row].clone();
            for j in c + 1..cols {
                if !w.get(row, j).is_zero() && !x[j].is_zero() {
                    acc = &acc - &(w.get(row, j) * &x[j]);
                }
            }
            x[c] = &acc / w.get(row, c);
        }
        Some(x)
    }

    /// Solve `x * self = target` for a row vector `x`; `None` when `target`
    /// is outside the row space.
    pub fn solve_left(&self, target: &[Scalar]) -> Option<Vec<Scalar>> {
        assert_eq!(target.len(), self.cols);
        self.transpose().solve(target)
    }
}

// JSON form: {"rows": R, "cols": C, "entries": [scalar, ...]} row-major.
impl Serialize for Matrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = serializer.serialize_struct("Matrix", 3)?;
        st.serialize_field("rows", &self.rows)?;
        st.serialize_field("cols", &self.cols)?;
        st.serialize_field("entries", &self.data)?;
        st.end()
    }
}

impl<'de> Deserialize<'de> for Matrix {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Matrix, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            rows: usize,
            cols: usize,
            entries: Vec<Scalar>,
        }
        let raw = Raw::deserialize(deserializer)?;
        if raw.entries.len() != raw.rows * raw.cols {
            return Err(serde::de::Error::custom(format!(
                "expected {} entries, got {}",
                raw.rows * raw.cols,
                raw.entries.len()
            )));
        }
        Ok(Matrix {
            rows: raw.rows,
            cols: raw.cols,
            data: raw.entries,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Scalar;

    #[test]
    fn det_small_cases() {
        let m = Matrix::from_i64(&[&[1, 2], &[3, 4]]);
        assert_eq!(m.det().unwrap(), Scalar::from_int(-2));
        assert_eq!(Matrix::identity(3).det().unwrap(), Scalar::one());
        // [[1, i], [i, 1]] -> 1 - i^2 = 2
        let i = Scalar::i();
        let m = Matrix::from_rows(vec![
            vec![Scalar::one(), i.clone()],
            vec![i, Scalar::one()],
        ]);
        assert_eq!(m.det().unwrap(), Scalar::from_int(2));
    }

    #[test]
    fn det_rejects_non_square() {
        let m = Matrix::zeros(2, 3);
        assert!(matches!(m.det(), Err(Error::NonSquare { .. })));
    }

    #[test]
    fn rank_cases() {
        assert_eq!(Matrix::zeros(3, 3).rank(), 0);
        let ones = Matrix::from_fn(4, 4, |_, _| Scalar::one());
        assert_eq!(ones.rank(), 1);
        assert_eq!(Matrix::identity(4).rank(), 4);
        assert!(ones.rank_at_most(1));
        assert!(!ones.rank_at_most(0));
    }

    #[test]
    fn submatrix_cases() {
        let id3 = Matrix::identity(3);
        assert_eq!(id3.submatrix(&[1, 2], &[1, 2]).unwrap(), Matrix::identity(2));
        assert_eq!(id3.submatrix(&[0, 1, 2], &[0, 1, 2]).unwrap(), id3);
        let m = Matrix::from_i64(&[&[1, 2], &[3, 4]]);
        assert_eq!(
            m.submatrix(&[1], &[0]).unwrap(),
            Matrix::from_i64(&[&[3]])
        );
        assert!(m.submatrix(&[2], &[0]).is_err());
    }

    #[test]
    fn inverse_round_trip() {
        let m = Matrix::from_i64(&[&[2, 1], &[7, 4]]);
        let inv = m.inverse().unwrap();
        assert_eq!(m.matmul(&inv), Matrix::identity(2));
        assert!(Matrix::zeros(2, 2).inverse().is_none());
    }

    #[test]
    fn solve_and_solve_left() {
        let m = Matrix::from_i64(&[&[1, 2], &[2, 4], &[0, 1]]);
        // target in the row space of [[1,2],[0,1]]
        let basis = Matrix::from_i64(&[&[1, 2], &[0, 1]]);
        let x = basis.solve_left(&[Scalar::from_int(2), Scalar::from_int(5)]).unwrap();
        assert_eq!(x, vec![Scalar::from_int(2), Scalar::from_int(1)]);
        // inconsistent system
        assert!(m
            .solve(&[Scalar::one(), Scalar::one(), Scalar::zero()])
            .is_none());
    }

    #[test]
    fn det_rank_agree_when_square() {
        let m = Matrix::from_i64(&[&[1, 2, 3], &[4, 5, 6], &[7, 8, 9]]);
        assert_eq!(m.rank(), 2);
        assert!(m.det().unwrap().is_zero());
    }
}
