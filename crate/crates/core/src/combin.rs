//! Subset enumeration in lexicographic order, with unranking so exact
//! scans can be chunked by index range.

/// `C(n, k)` as u128, `None` on overflow.
pub fn binomial(n: u64, k: u64) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.checked_mul((n - i) as u128)?;
        acc /= (i + 1) as u128;
    }
    Some(acc)
}

/// The `idx`-th `k`-subset of `0..n` in lexicographic order.
pub fn unrank_combination(n: usize, k: usize, mut idx: u128) -> Vec<usize> {
    let mut out = Vec::with_capacity(k);
    let mut remaining = k;
    let mut a = 0usize;
    while remaining > 0 {
        let c = binomial((n - a - 1) as u64, (remaining - 1) as u64)
            .expect("binomial overflow in unrank");
        if idx < c {
            out.push(a);
            remaining -= 1;
        } else {
            idx -= c;
        }
        a += 1;
    }
    out
}

/// Iterator over all `k`-subsets of `0..n` in lexicographic order.
pub struct Combinations {
    n: usize,
    k: usize,
    state: Option<Vec<usize>>,
}

pub fn combinations(n: usize, k: usize) -> Combinations {
    let state = if k <= n {
        Some((0..k).collect())
    } else {
        None
    };
    Combinations { n, k, state }
}

impl Iterator for Combinations {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let current = self.state.clone()?;
        // advance
        let s = self.state.as_mut().unwrap();
        let mut i = self.k;
        loop {
            if i == 0 {
                self.state = None;
                break;
            }
            i -= 1;
            if s[i] < self.n - (self.k - i) {
                s[i] += 1;
                for j in i + 1..self.k {
                    s[j] = s[j - 1] + 1;
                }
                break;
            }
        }
        Some(current)
    }
}

/// All subsets of `0..n` with exactly `k` elements, as sorted index vectors.
pub fn subsets_of_size(n: usize, k: usize) -> Vec<Vec<usize>> {
    combinations(n, k).collect()
}
