//! Symmetric generalized arithmetic progressions over Gaussian-rational
//! vectors: membership, volume, bounded minimal-cover search, and the
//! bounded-integer-matrix count Z(V).
//!
//! A symmetric GAP is the map (not the image set)
//! `(a_1, .., a_r) -> a_1 v_1 + .. + a_r v_r` on the integer box
//! `|a_i| <= N_i`; its rank is `r` and its volume `prod (2 N_i + 1)`.
//! The cover search is a bounded-box surrogate for the true minimum volume:
//! complete over its declared candidate space (submultiples of values and
//! pairwise differences up to `generator_bound`), and labelled as an upper
//! bound for the unbounded optimum.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::caps::Caps;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymmetricGAP {
    pub generators: Vec<Vec<Scalar>>,
    pub bounds: Vec<u64>,
}

impl SymmetricGAP {
    pub fn rank(&self) -> usize {
        self.generators.len()
    }

    fn validate(&self) -> Result<()> {
        if self.generators.len() != self.bounds.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} generators, {} bounds",
                self.generators.len(),
                self.bounds.len()
            )));
        }
        let dim = self.generators.first().map_or(0, Vec::len);
        if self.generators.iter().any(|g| g.len() != dim) {
            return Err(Error::DimensionMismatch(
                "generators have mixed ambient dimensions".into(),
            ));
        }
        Ok(())
    }
}

/// Exact volume `prod (2 N_i + 1)`; rank 0 has volume 1.
pub fn gap_volume(g: &SymmetricGAP) -> Result<u128> {
    g.validate()?;
    let mut vol: u128 = 1;
    for &n in &g.bounds {
        vol = vol
            .checked_mul(2 * n as u128 + 1)
            .ok_or(Error::CapExceeded { needed: u128::MAX, cap: u128::MAX })?;
    }
    Ok(vol)
}

fn scaled_add(acc: &mut [Scalar], v: &[Scalar], c: i64) {
    if c == 0 {
        return;
    }
    let c = Scalar::from_int(c);
    for (slot, x) in acc.iter_mut().zip(v) {
        *slot = &*slot + &(&c * x);
    }
}

/// Membership by bounded enumeration of the coefficient box: true iff
/// integers `a_i` with `|a_i| <= N_i` give `sum a_i v_i = u`.
pub fn gap_contains(g: &SymmetricGAP, u: &[Scalar], caps: &Caps) -> Result<bool> {
    g.validate()?;
    let dim = g.generators.first().map_or(u.len(), Vec::len);
    if u.len() != dim {
        return Err(Error::DimensionMismatch(format!(
            "value has dimension {}, GAP has {dim}",
            u.len()
        )));
    }
    let vol = gap_volume(g)?;
    caps.check_box(vol)?;
    if g.rank() == 0 {
        return Ok(u.iter().all(Scalar::is_zero));
    }
    // odometer over the coefficient box
    let r = g.rank();
    let mut coef: Vec<i64> = g.bounds.iter().map(|&n| -(n as i64)).collect();
    let mut point = vec![Scalar::zero(); dim];
    for (i, c) in coef.iter().enumerate() {
        scaled_add(&mut point, &g.generators[i], *c);
    }
    loop {
        if point.iter().zip(u).all(|(a, b)| a == b) {
            return Ok(true);
        }
        // advance: increment the last coefficient that can move
        let mut axis = r;
        loop {
            if axis == 0 {
                return Ok(false);
            }
            axis -= 1;
            if coef[axis] < g.bounds[axis] as i64 {
                coef[axis] += 1;
                scaled_add(&mut point, &g.generators[axis], 1);
                break;
            }
            // reset axis to -N and carry
            let span = 2 * g.bounds[axis] as i64;
            coef[axis] -= span;
            scaled_add(&mut point, &g.generators[axis], -span);
        }
    }
}

#[derive(Clone, Debug)]
pub struct CoverQuery {
    /// Ambient vectors to cover.
    pub values: Vec<Vec<Scalar>>,
    /// Max GAP rank; the bounded search is complete only for rank <= 2.
    pub max_rank: usize,
    /// How many values may be left uncovered.
    pub outliers_allowed: usize,
    /// Denominator bound for candidate generators (submultiples `w/m` of
    /// values and pairwise differences, `1 <= m <= generator_bound`).
    pub generator_bound: u64,
    /// Candidate GAPs with volume above this are discarded.
    pub volume_cap: u128,
}

#[derive(Clone, Debug, Serialize)]
pub struct Cover {
    pub gap: SymmetricGAP,
    pub volume: u128,
    /// Indices of the covered values.
    pub covered: Vec<usize>,
    /// The result is an upper bound for the unbounded minimum volume;
    /// minimality is only guaranteed within the declared search box.
    pub search_complete_in_box: bool,
}

/// Integer `a` with `a * v = u`, if one exists (`v` nonzero).
fn integer_ratio(u: &[Scalar], v: &[Scalar]) -> Option<i64> {
    let j = v.iter().position(|x| !x.is_zero())?;
    let a = &u[j] / &v[j];
    if !a.is_real() || !a.re().is_integer() {
        return None;
    }
    let a_int = a.re().as_i64()?;
    let a_scalar = Scalar::from_int(a_int);
    for (ui, vi) in u.iter().zip(v) {
        if *ui != &a_scalar * vi {
            return None;
        }
    }
    Some(a_int)
}

/// Normalize a direction: scale so the first nonzero coordinate is 1.
fn normalize_direction(v: &[Scalar]) -> Option<Vec<Scalar>> {
    let j = v.iter().position(|x| !x.is_zero())?;
    let inv = v[j].recip();
    Some(v.iter().map(|x| x * &inv).collect())
}

/// Canonical sign: a symmetric GAP's image is invariant under negating a
/// generator, so flip the vector when its first nonzero coordinate is
/// negative in the (re, im) order.
fn canonical_sign(v: Vec<Scalar>) -> Vec<Scalar> {
    match v.iter().find(|x| !x.is_zero()) {
        Some(lead) if *lead < Scalar::zero() => v.iter().map(|x| -x).collect(),
        _ => v,
    }
}

fn rank1_candidates(values: &[Vec<Scalar>], bound: u64) -> Vec<Vec<Scalar>> {
    let mut base: Vec<Vec<Scalar>> = Vec::new();
    for v in values {
        if !v.iter().all(Scalar::is_zero) {
            base.push(v.clone());
        }
    }
    for i in 0..values.len() {
        for j in i + 1..values.len() {
            let diff: Vec<Scalar> = values[i]
                .iter()
                .zip(&values[j])
                .map(|(a, b)| a - b)
                .collect();
            if !diff.iter().all(Scalar::is_zero) {
                base.push(diff);
            }
        }
    }
    let mut out: BTreeSet<Vec<Scalar>> = BTreeSet::new();
    for w in base {
        for m in 1..=bound.max(1) {
            let scale = Scalar::from_ratio(1, m as i64);
            let cand: Vec<Scalar> = w.iter().map(|x| x * &scale).collect();
            if let Some(normed) = normalize_direction(&cand) {
                // keep the un-normalized submultiple too: integer-multiple
                // structure depends on the scale, not just the direction
                out.insert(canonical_sign(cand));
                out.insert(canonical_sign(normed));
            }
        }
    }
    out.into_iter().collect()
}

/// Searches rank 0, rank 1, then rank 2 for the minimum-volume symmetric
/// GAP (within the candidate box) covering all but at most
/// `outliers_allowed` of the values. Ties break toward smaller volume,
/// then lexicographically smaller generator list.
pub fn minimal_cover(query: &CoverQuery, caps: &Caps) -> Result<Option<Cover>> {
    if query.max_rank > 2 {
        return Err(Error::Precondition(
            "cover search is complete only for rank <= 2".into(),
        ));
    }
    if query.values.is_empty() {
        return Err(Error::Precondition("no values to cover".into()));
    }
    if query.outliers_allowed > query.values.len() {
        return Err(Error::Precondition("outlier budget exceeds value count".into()));
    }
    let dim = query.values[0].len();
    if query.values.iter().any(|v| v.len() != dim) {
        return Err(Error::DimensionMismatch("values have mixed dimensions".into()));
    }
    if query.values.len() > 63 {
        return Err(Error::Precondition(
            "cover search tracks outlier sets in a 64-bit mask; at most 63 values".into(),
        ));
    }

    let mut best: Option<Cover> = None;
    let mut consider = |cover: Cover| {
        let better = match &best {
            None => true,
            Some(b) => {
                (cover.volume, &cover.gap.generators) < (b.volume, &b.gap.generators)
            }
        };
        if better {
            best = Some(cover);
        }
    };

    // rank 0: the zero GAP covers exactly the zero values
    let nonzero: Vec<usize> = (0..query.values.len())
        .filter(|&i| !query.values[i].iter().all(Scalar::is_zero))
        .collect();
    if nonzero.len() <= query.outliers_allowed {
        consider(Cover {
            gap: SymmetricGAP { generators: vec![], bounds: vec![] },
            volume: 1,
            covered: (0..query.values.len())
                .filter(|i| !nonzero.contains(i))
                .collect(),
            search_complete_in_box: true,
        });
        // volume 1 is globally minimal; nothing can beat it
        return Ok(best);
    }

    let candidates = if query.max_rank >= 1 {
        rank1_candidates(&query.values, query.generator_bound)
    } else {
        Vec::new()
    };

    // rank 1
    for cand in &candidates {
        let mut reps: Vec<Option<i64>> = Vec::with_capacity(query.values.len());
        for v in &query.values {
            if v.iter().all(Scalar::is_zero) {
                reps.push(Some(0));
            } else {
                reps.push(integer_ratio(v, cand));
            }
        }
        let missing = reps.iter().filter(|r| r.is_none()).count();
        if missing > query.outliers_allowed {
            continue;
        }
        // drop the largest |a| among the remaining budget
        let mut with_a: Vec<(u64, usize)> = reps
            .iter()
            .enumerate()
            .filter_map(|(i, r)| r.map(|a| (a.unsigned_abs(), i)))
            .collect();
        with_a.sort_unstable();
        let extra_drops = query.outliers_allowed - missing;
        let kept = &with_a[..with_a.len().saturating_sub(extra_drops)];
        let n1 = kept.last().map_or(0, |&(a, _)| a);
        let volume = 2 * n1 as u128 + 1;
        if volume > query.volume_cap {
            continue;
        }
        consider(Cover {
            gap: SymmetricGAP { generators: vec![cand.clone()], bounds: vec![n1] },
            volume,
            covered: kept.iter().map(|&(_, i)| i).collect::<BTreeSet<_>>().into_iter().collect(),
            search_complete_in_box: true,
        });
    }

    // rank 2: pairs of rank-1 candidates, Pareto DP over (N1, N2, skips)
    if query.max_rank >= 2 {
        let coef_bound = ((query.volume_cap.saturating_sub(1)) / 2).min(1 << 20) as i64;
        let mut budget: u128 = 0;
        for gi in 0..candidates.len() {
            for gj in gi + 1..candidates.len() {
                budget += (2 * coef_bound as u128 + 1) * query.values.len() as u128;
                caps.check_box(budget)?;
                if let Some(cover) = rank2_pair_cover(
                    query,
                    &candidates[gi],
                    &candidates[gj],
                    coef_bound,
                ) {
                    consider(cover);
                }
            }
        }
    }

    // soundness: re-verify membership of everything reported covered
    if let Some(cover) = &best {
        for &i in &cover.covered {
            if !gap_contains(&cover.gap, &query.values[i], caps)? {
                return Err(Error::Domain(
                    "internal: cover search reported a non-member as covered".into(),
                ));
            }
        }
    }
    Ok(best)
}

fn rank2_pair_cover(
    query: &CoverQuery,
    v1: &[Scalar],
    v2: &[Scalar],
    coef_bound: i64,
) -> Option<Cover> {
    // representations per value: all (a1, a2) with a1 v1 + a2 v2 = u
    let mut reps: Vec<Vec<(i64, i64)>> = Vec::with_capacity(query.values.len());
    for u in &query.values {
        let mut list = Vec::new();
        for a1 in -coef_bound..=coef_bound {
            // residual = u - a1 v1 must be an integer multiple of v2
            let residual: Vec<Scalar> = u
                .iter()
                .zip(v1)
                .map(|(ui, wi)| ui - &(&Scalar::from_int(a1) * wi))
                .collect();
            if residual.iter().all(Scalar::is_zero) {
                list.push((a1, 0));
            } else if let Some(a2) = integer_ratio(&residual, v2) {
                if a2.unsigned_abs() <= coef_bound as u64 {
                    list.push((a1, a2));
                }
            }
        }
        reps.push(list);
    }
    // Pareto states: (N1, N2, skip mask); dominated states pruned
    #[derive(Clone)]
    struct State {
        n1: u64,
        n2: u64,
        mask: u64,
    }
    let dominates = |a: &State, b: &State| {
        a.n1 <= b.n1 && a.n2 <= b.n2 && a.mask.count_ones() <= b.mask.count_ones()
    };
    let mut states = vec![State { n1: 0, n2: 0, mask: 0 }];
    for (i, list) in reps.iter().enumerate() {
        let mut next: Vec<State> = Vec::new();
        let mut push = |s: State| {
            if next.iter().any(|t| dominates(t, &s)) {
                return;
            }
            next.retain(|t| !dominates(&s, t));
            next.push(s);
        };
        for s in &states {
            if (s.mask.count_ones() as usize) < query.outliers_allowed {
                push(State { n1: s.n1, n2: s.n2, mask: s.mask | 1 << i });
            }
            for &(a1, a2) in list {
                push(State {
                    n1: s.n1.max(a1.unsigned_abs()),
                    n2: s.n2.max(a2.unsigned_abs()),
                    mask: s.mask,
                });
            }
        }
        if next.is_empty() {
            return None;
        }
        states = next;
    }
    let best = states
        .into_iter()
        .map(|s| {
            let volume = (2 * s.n1 as u128 + 1) * (2 * s.n2 as u128 + 1);
            (volume, s)
        })
        .filter(|(vol, _)| *vol <= query.volume_cap)
        .min_by_key(|(vol, s)| (*vol, s.n1, s.mask))?;
    let (volume, s) = best;
    Some(Cover {
        gap: SymmetricGAP {
            generators: vec![v1.to_vec(), v2.to_vec()],
            bounds: vec![s.n1, s.n2],
        },
        volume,
        covered: (0..query.values.len())
            .filter(|&i| s.mask >> i & 1 == 0)
            .collect(),
        search_complete_in_box: true,
    })
}

/// Exact cardinality of `Z(V)`: the union over `(N_1, .., N_r)` with
/// `prod (2 N_i + 1) <= V` of the integer `r x m` matrices whose row-`i`
/// entries are bounded by `N_i` in absolute value, counted by enumeration
/// with deduplication.
pub fn count_z_v(r: usize, m: usize, v: u64, caps: &Caps) -> Result<u64> {
    if r == 0 || m == 0 {
        return Err(Error::Precondition("need r >= 1 and m >= 1".into()));
    }
    if v == 0 {
        return Ok(0);
    }
    let mut seen: BTreeSet<Vec<i64>> = BTreeSet::new();
    let mut budget: u128 = 0;
    // enumerate bound profiles
    let mut profile = vec![0u64; r];
    loop {
        // volume of the current profile
        let mut vol: u128 = 1;
        for &n in &profile {
            vol = vol.saturating_mul(2 * n as u128 + 1);
        }
        if vol <= v as u128 {
            // enumerate matrices row by row
            let mut per_cell: Vec<i64> = Vec::with_capacity(r * m);
            for &n in &profile {
                for _ in 0..m {
                    per_cell.push(n as i64);
                }
            }
            let cells = r * m;
            let mut entry: Vec<i64> = per_cell.iter().map(|&n| -n).collect();
            let count: u128 = per_cell.iter().map(|&n| 2 * n as u128 + 1).product();
            budget += count;
            caps.check_box(budget)?;
            loop {
                seen.insert(entry.clone());
                let mut c = cells;
                loop {
                    if c == 0 {
                        break;
                    }
                    c -= 1;
                    if entry[c] < per_cell[c] {
                        entry[c] += 1;
                        break;
                    }
                    entry[c] = -per_cell[c];
                    if c == 0 {
                        c = usize::MAX;
                        break;
                    }
                }
                if c == usize::MAX || cells == 0 {
                    break;
                }
            }
        }
        // advance profile: bound each N_i by (v - 1) / 2
        let max_n = (v - 1) / 2;
        let mut axis = r;
        loop {
            if axis == 0 {
                return Ok(seen.len() as u64);
            }
            axis -= 1;
            if profile[axis] < max_n {
                profile[axis] += 1;
                break;
            }
            profile[axis] = 0;
        }
    }
}

/// The direct-union count of `Z(V)` via max-absolute-value row profiles:
/// a matrix lies in `Z(V)` iff `prod (2 max|row_i| + 1) <= V`, so the count
/// is a sum over maxabs profiles of products of exact row counts. Used as
/// an independent cross-check for [`count_z_v`].
pub fn count_z_v_by_profile(r: usize, m: usize, v: u64) -> Result<u64> {
    if r == 0 || m == 0 {
        return Err(Error::Precondition("need r >= 1 and m >= 1".into()));
    }
    if v == 0 {
        return Ok(0);
    }
    // rows with maxabs exactly M: (2M+1)^m - (2M-1)^m, and 1 for M = 0
    let row_count = |mx: u64| -> u128 {
        if mx == 0 {
            1
        } else {
            (2 * mx as u128 + 1).pow(m as u32) - (2 * mx as u128 - 1).pow(m as u32)
        }
    };
    fn rec(r_left: usize, vol_left: u64, row_count: &dyn Fn(u64) -> u128) -> u128 {
        if r_left == 0 {
            return 1;
        }
        let mut acc: u128 = 0;
        let mut mx = 0u64;
        while 2 * mx + 1 <= vol_left {
            acc += row_count(mx) * rec(r_left - 1, vol_left / (2 * mx + 1), row_count);
            mx += 1;
        }
        acc
    }
    Ok(rec(r, v, &row_count) as u64)
}
