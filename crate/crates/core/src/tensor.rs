//! Dense d-dimensional tensors, flattenings, and partition-rank-1
//! (reducibility) machinery.
//!
//! A tensor is a function on a product of index sets, stored row-major with
//! the last axis fastest. A tensor is *reducible with respect to* a
//! non-trivial bipartition `{J1, J2}` of its axes when it factors as a
//! tensor product across that split; equivalently, the matrix flattening
//! along the split has rank at most 1. The zero tensor is reducible by
//! convention.
//!
//! The flattening index bijection is fixed as row-major over ascending axes
//! within each side; repair reconstruction depends on it.

use serde::ser::SerializeStruct;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Tensor {
    dims: Vec<usize>,
    data: Vec<Scalar>,
}

/// Non-trivial bipartition of the axis set `{0, .., d-1}`.
/// Canonical form: axis 0 lies in `j1`, both sides sorted.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AxisPartition {
    j1: Vec<usize>,
    j2: Vec<usize>,
}

impl AxisPartition {
    pub fn new(d: usize, side1: &[usize]) -> Result<AxisPartition> {
        if d < 2 {
            return Err(Error::InvalidPartition(format!(
                "need at least 2 axes, got {d}"
            )));
        }
        let mut in1 = vec![false; d];
        for &a in side1 {
            if a >= d {
                return Err(Error::InvalidPartition(format!(
                    "axis {a} out of range for d={d}"
                )));
            }
            if in1[a] {
                return Err(Error::InvalidPartition(format!("axis {a} repeated")));
            }
            in1[a] = true;
        }
        let j1: Vec<usize> = (0..d).filter(|&a| in1[a]).collect();
        let j2: Vec<usize> = (0..d).filter(|&a| !in1[a]).collect();
        if j1.is_empty() || j2.is_empty() {
            return Err(Error::InvalidPartition("both sides must be nonempty".into()));
        }
        // Unordered partition: normalize so axis 0 is on side 1.
        if j1[0] == 0 {
            Ok(AxisPartition { j1, j2 })
        } else {
            Ok(AxisPartition { j1: j2, j2: j1 })
        }
    }

    pub fn side1(&self) -> &[usize] {
        &self.j1
    }

    pub fn side2(&self) -> &[usize] {
        &self.j2
    }

    /// All 2^(d-1) - 1 non-trivial unordered partitions, sorted by
    /// (|J1|, lexicographic J1). This is the canonical witness order.
    pub fn enumerate(d: usize) -> Vec<AxisPartition> {
        assert!(d >= 2 && d < usize::BITS as usize);
        let mut parts: Vec<AxisPartition> = Vec::with_capacity((1 << (d - 1)) - 1);
        // Subsets of {1..d-1} joined with {0}, excluding the full set.
        for mask in 0..(1u64 << (d - 1)) {
            let mut side1 = vec![0usize];
            for a in 1..d {
                if mask >> (a - 1) & 1 == 1 {
                    side1.push(a);
                }
            }
            if side1.len() == d {
                continue;
            }
            parts.push(AxisPartition::new(d, &side1).unwrap());
        }
        parts.sort_by(|a, b| (a.j1.len(), &a.j1).cmp(&(b.j1.len(), &b.j1)));
        parts
    }
}

impl std::fmt::Display for AxisPartition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        // 1-based axis labels, the same syntax the CLI accepts.
        let side = |s: &[usize]| {
            s.iter()
                .map(|a| (a + 1).to_string())
                .collect::<Vec<_>>()
                .join(",")
        };
        write!(f, "{}|{}", side(&self.j1), side(&self.j2))
    }
}

impl Tensor {
    pub fn zeros(dims: Vec<usize>) -> Tensor {
        assert!(!dims.is_empty());
        let len = dims.iter().product();
        Tensor {
            dims,
            data: vec![Scalar::zero(); len],
        }
    }

    pub fn from_entries(dims: Vec<usize>, data: Vec<Scalar>) -> Result<Tensor> {
        if dims.is_empty() {
            return Err(Error::DimensionMismatch("tensor needs at least one axis".into()));
        }
        let len: usize = dims.iter().product();
        if data.len() != len {
            return Err(Error::DimensionMismatch(format!(
                "expected {len} entries for dims {dims:?}, got {}",
                data.len()
            )));
        }
        Ok(Tensor { dims, data })
    }

    pub fn from_fn(dims: Vec<usize>, mut f: impl FnMut(&[usize]) -> Scalar) -> Tensor {
        let mut t = Tensor::zeros(dims);
        let d = t.dims.len();
        let mut idx = vec![0usize; d];
        for flat in 0..t.data.len() {
            t.data[flat] = f(&idx);
            for a in (0..d).rev() {
                idx[a] += 1;
                if idx[a] < t.dims[a] {
                    break;
                }
                idx[a] = 0;
            }
        }
        t
    }

    /// A matrix viewed as a 2-dimensional tensor.
    pub fn from_matrix(m: &Matrix) -> Tensor {
        Tensor {
            dims: vec![m.n_rows(), m.n_cols()],
            data: m.entries().to_vec(),
        }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn d(&self) -> usize {
        self.dims.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn entries(&self) -> &[Scalar] {
        &self.data
    }

    pub fn flat(&self, flat_index: usize) -> &Scalar {
        &self.data[flat_index]
    }

    pub fn get(&self, idx: &[usize]) -> &Scalar {
        debug_assert_eq!(idx.len(), self.dims.len());
        let mut flat = 0usize;
        for (a, &i) in idx.iter().enumerate() {
            flat = flat * self.dims[a] + i;
        }
        &self.data[flat]
    }

    pub fn set(&mut self, idx: &[usize], v: Scalar) {
        let mut flat = 0usize;
        for (a, &i) in idx.iter().enumerate() {
            flat = flat * self.dims[a] + i;
        }
        self.data[flat] = v;
    }

    pub fn nnz(&self) -> u64 {
        self.data.iter().filter(|e| !e.is_zero()).count() as u64
    }

    pub fn hamming(&self, other: &Tensor) -> u64 {
        assert_eq!(self.dims, other.dims);
        self.data
            .iter()
            .zip(&other.data)
            .filter(|(a, b)| a != b)
            .count() as u64
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Scalar::is_zero)
    }

    /// Restriction `T[S_1, .., S_d]`, preserving order within each `S_a`.
    pub fn subtensor(&self, sets: &[Vec<usize>]) -> Result<Tensor> {
        if sets.len() != self.d() {
            return Err(Error::DimensionMismatch(format!(
                "expected {} index sets, got {}",
                self.d(),
                sets.len()
            )));
        }
        for (a, s) in sets.iter().enumerate() {
            for &i in s {
                if i >= self.dims[a] {
                    return Err(Error::IndexOutOfRange { index: i, limit: self.dims[a] });
                }
            }
        }
        let new_dims: Vec<usize> = sets.iter().map(Vec::len).collect();
        let mut out = Tensor::zeros(new_dims);
        let d = self.d();
        let mut idx = vec![0usize; d];
        let mut src = vec![0usize; d];
        for flat in 0..out.data.len() {
            for a in 0..d {
                src[a] = sets[a][idx[a]];
            }
            out.data[flat] = self.get(&src).clone();
            for a in (0..d).rev() {
                idx[a] += 1;
                if idx[a] < out.dims[a] {
                    break;
                }
                idx[a] = 0;
            }
        }
        Ok(out)
    }

    /// The `r1 x r2` flattening along `p`, `r_s` the product of the side-`s`
    /// dims; multi-indices map row-major over ascending axes within a side.
    pub fn flatten(&self, p: &AxisPartition) -> Result<Matrix> {
        self.check_partition(p)?;
        let r1: usize = p.side1().iter().map(|&a| self.dims[a]).product();
        let r2: usize = p.side2().iter().map(|&a| self.dims[a]).product();
        let mut m = Matrix::zeros(r1, r2);
        let d = self.d();
        let mut idx = vec![0usize; d];
        for flat in 0..self.data.len() {
            let mut row = 0usize;
            for &a in p.side1() {
                row = row * self.dims[a] + idx[a];
            }
            let mut col = 0usize;
            for &a in p.side2() {
                col = col * self.dims[a] + idx[a];
            }
            m.set(row, col, self.data[flat].clone());
            for a in (0..d).rev() {
                idx[a] += 1;
                if idx[a] < self.dims[a] {
                    break;
                }
                idx[a] = 0;
            }
        }
        Ok(m)
    }

    fn check_partition(&self, p: &AxisPartition) -> Result<()> {
        let d = self.d();
        if p.side1().iter().chain(p.side2()).any(|&a| a >= d)
            || p.side1().len() + p.side2().len() != d
        {
            return Err(Error::InvalidPartition(format!(
                "partition {p} does not match a {d}-dimensional tensor"
            )));
        }
        Ok(())
    }

    /// Reducibility with respect to a fixed partition: the flattening has
    /// rank at most 1.
    pub fn is_reducible_wrt(&self, p: &AxisPartition) -> Result<bool> {
        self.check_partition(p)?;
        Ok(flatten_rank_le_one(&self.dims, p, &|idx| self.get(idx)))
    }

    /// Tries all non-trivial partitions in canonical order and returns the
    /// first witnessing one, or `None` if the tensor is irreducible.
    pub fn is_reducible(&self) -> Result<Option<AxisPartition>> {
        if self.d() < 2 {
            return Err(Error::Domain(
                "reducibility is undefined for 1-dimensional tensors".into(),
            ));
        }
        for p in AxisPartition::enumerate(self.d()) {
            if self.is_reducible_wrt(&p)? {
                return Ok(Some(p));
            }
        }
        Ok(None)
    }

    /// Constructive factorization `T = T1 (x) T2` across `p`, when reducible.
    pub fn factor_wrt(&self, p: &AxisPartition) -> Result<Option<(Tensor, Tensor)>> {
        if !self.is_reducible_wrt(p)? {
            return Ok(None);
        }
        let dims1: Vec<usize> = p.side1().iter().map(|&a| self.dims[a]).collect();
        let dims2: Vec<usize> = p.side2().iter().map(|&a| self.dims[a]).collect();
        let m = self.flatten(p)?;
        let (r1, r2) = (m.n_rows(), m.n_cols());
        let pivot = (0..r1)
            .flat_map(|i| (0..r2).map(move |j| (i, j)))
            .find(|&(i, j)| !m.get(i, j).is_zero());
        let (t1_flat, t2_flat) = match pivot {
            None => (vec![Scalar::zero(); r1], vec![Scalar::zero(); r2]),
            Some((i0, j0)) => {
                let scale = m.get(i0, j0).recip();
                let u: Vec<Scalar> = (0..r1).map(|i| m.get(i, j0).clone()).collect();
                let v: Vec<Scalar> = (0..r2).map(|j| m.get(i0, j) * &scale).collect();
                (u, v)
            }
        };
        let t1 = Tensor::from_entries(dims1, t1_flat)?;
        let t2 = Tensor::from_entries(dims2, t2_flat)?;
        Ok(Some((t1, t2)))
    }

    /// Contraction with `x` along the last axis: the (d-1)-dimensional
    /// tensor with entries `sum_i T(.., i) x_i`.
    pub fn collapse(&self, x: &[Scalar]) -> Result<Tensor> {
        if self.d() < 2 {
            return Err(Error::Domain("collapse needs d >= 2".into()));
        }
        let last = *self.dims.last().unwrap();
        if x.len() != last {
            return Err(Error::DimensionMismatch(format!(
                "collapse vector has length {}, last axis has {last}",
                x.len()
            )));
        }
        let out_dims: Vec<usize> = self.dims[..self.d() - 1].to_vec();
        let out_len: usize = out_dims.iter().product();
        let mut data = vec![Scalar::zero(); out_len];
        for (o, slot) in data.iter_mut().enumerate() {
            let base = o * last;
            let mut acc = Scalar::zero();
            for (i, xi) in x.iter().enumerate() {
                if !xi.is_zero() && !self.data[base + i].is_zero() {
                    acc = &acc + &(&self.data[base + i] * xi);
                }
            }
            *slot = acc;
        }
        Tensor::from_entries(out_dims, data)
    }

    /// Tensor product: dims concatenated, entries multiplied.
    pub fn tensor_product(&self, other: &Tensor) -> Tensor {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        let mut data = Vec::with_capacity(self.data.len() * other.data.len());
        for a in &self.data {
            for b in &other.data {
                data.push(a * b);
            }
        }
        Tensor { dims, data }
    }

    /// Reorder axes so that input axis `perm[k]` becomes output axis `k`.
    pub fn permute_axes(&self, perm: &[usize]) -> Tensor {
        assert_eq!(perm.len(), self.d());
        let new_dims: Vec<usize> = perm.iter().map(|&a| self.dims[a]).collect();
        let mut out = Tensor::zeros(new_dims);
        let d = self.d();
        let mut idx = vec![0usize; d];
        let mut src = vec![0usize; d];
        for flat in 0..out.data.len() {
            for k in 0..d {
                src[perm[k]] = idx[k];
            }
            out.data[flat] = self.get(&src).clone();
            for a in (0..d).rev() {
                idx[a] += 1;
                if idx[a] < out.dims[a] {
                    break;
                }
                idx[a] = 0;
            }
        }
        out
    }
}

/// Rank-at-most-1 test of the flattening of an index-addressed tensor view,
/// without materializing the matrix: every row must be proportional to the
/// first nonzero row, checked by cross-multiplication.
pub(crate) fn flatten_rank_le_one<'a, F>(dims: &[usize], p: &AxisPartition, entry: &F) -> bool
where
    F: Fn(&[usize]) -> &'a Scalar,
{
    let axes1 = p.side1();
    let axes2 = p.side2();
    let r1: usize = axes1.iter().map(|&a| dims[a]).product();
    let r2: usize = axes2.iter().map(|&a| dims[a]).product();
    let d = dims.len();
    let mut idx = vec![0usize; d];
    let mut at = |row: usize, col: usize| -> &'a Scalar {
        let mut rr = row;
        for &a in axes1.iter().rev() {
            idx[a] = rr % dims[a];
            rr /= dims[a];
        }
        let mut cc = col;
        for &a in axes2.iter().rev() {
            idx[a] = cc % dims[a];
            cc /= dims[a];
        }
        entry(&idx)
    };
    // First row with a nonzero entry.
    let mut pivot_row = None;
    'outer: for i in 0..r1 {
        for j in 0..r2 {
            if !at(i, j).is_zero() {
                pivot_row = Some(i);
                break 'outer;
            }
        }
    }
    let Some(pr) = pivot_row else {
        return true; // zero tensor
    };
    let pivot: Vec<&Scalar> = (0..r2).map(|j| at(pr, j)).collect();
    let j0 = pivot.iter().position(|e| !e.is_zero()).unwrap();
    for i in 0..r1 {
        if i == pr {
            continue;
        }
        let qj0 = at(i, j0);
        for j in 0..r2 {
            if j == j0 {
                continue;
            }
            // rows (pivot, q) proportional: q[j]*pivot[j0] == q[j0]*pivot[j]
            if at(i, j) * pivot[j0] != qj0 * pivot[j] {
                return false;
            }
        }
    }
    true
}

// JSON form: {"dims": [..], "entries": [scalar, ...]} row-major.
impl Serialize for Tensor {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = serializer.serialize_struct("Tensor", 2)?;
        st.serialize_field("dims", &self.dims)?;
        st.serialize_field("entries", &self.data)?;
        st.end()
    }
}

impl<'de> Deserialize<'de> for Tensor {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Tensor, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            dims: Vec<usize>,
            entries: Vec<Scalar>,
        }
        let raw = Raw::deserialize(deserializer)?;
        Tensor::from_entries(raw.dims, raw.entries).map_err(serde::de::Error::custom)
    }
}

/// Stack equal-shape matrices along a new last axis:
/// `T(i, j, k) = slices[k][i][j]`.
pub fn stack_slices(slices: &[Matrix]) -> Tensor {
    let r = slices[0].n_rows();
    let c = slices[0].n_cols();
    Tensor::from_fn(vec![r, c, slices.len()], |idx| {
        slices[idx[2]].get(idx[0], idx[1]).clone()
    })
}
