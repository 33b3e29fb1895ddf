//! Point probabilities of polynomials of independent random signs.
//!
//! The central quantity is `sup_z Pr[f(xi_1, .., xi_n) = z]` for a sparse
//! polynomial `f` and independent sign variables. Exact computation
//! enumerates the full outcome space (with an integer fast path when the
//! coefficients are integers and the signs are in {-1, 0, 1}); a dynamic
//! program over value distributions handles linear forms at much larger `n`;
//! the Monte Carlo estimator is the documented fallback beyond the caps.

use std::collections::BTreeMap;

use serde::ser::{SerializeMap, SerializeSeq, SerializeStruct};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::caps::Caps;
use crate::error::{Error, Result};
use crate::exec;
use crate::matrix::Matrix;
use crate::rat::Rat;
use crate::rng::SeedStreams;
use crate::scalar::Scalar;
use crate::stats::{binomial_ci, ConfidenceLevel};
use crate::tensor::Tensor;

/// Sparse monomial -> coefficient map for `f` in `F[x_1, .., x_n]`.
/// Monomials are sorted `(variable, exponent)` lists with exponents >= 1;
/// zero coefficients are never stored.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolynomialSpec {
    n_vars: usize,
    terms: BTreeMap<Vec<(usize, u32)>, Scalar>,
    degree: u32,
}

impl PolynomialSpec {
    pub fn new(n_vars: usize) -> PolynomialSpec {
        PolynomialSpec {
            n_vars,
            terms: BTreeMap::new(),
            degree: 0,
        }
    }

    /// Adds `coef * prod x_v^e`; merges with an existing term and drops the
    /// monomial if the combined coefficient vanishes.
    pub fn add_term(&mut self, exps: &[(usize, u32)], coef: Scalar) -> Result<()> {
        if coef.is_zero() {
            return Ok(());
        }
        let mut mono: Vec<(usize, u32)> = exps.iter().copied().filter(|&(_, e)| e > 0).collect();
        mono.sort_unstable();
        for w in mono.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::Precondition(format!(
                    "variable {} repeated in monomial",
                    w[0].0 + 1
                )));
            }
        }
        for &(v, _) in &mono {
            if v >= self.n_vars {
                return Err(Error::IndexOutOfRange { index: v, limit: self.n_vars });
            }
        }
        let entry = self.terms.entry(mono).or_insert_with(Scalar::zero);
        *entry = &*entry + &coef;
        if entry.is_zero() {
            let key: Vec<(usize, u32)> =
                exps.iter().copied().filter(|&(_, e)| e > 0).collect();
            let mut key = key;
            key.sort_unstable();
            self.terms.remove(&key);
        }
        self.degree = self
            .terms
            .keys()
            .map(|m| m.iter().map(|&(_, e)| e).sum())
            .max()
            .unwrap_or(0);
        Ok(())
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn n_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<(usize, u32)>, &Scalar)> {
        self.terms.iter()
    }

    pub fn eval(&self, point: &[Scalar]) -> Scalar {
        assert_eq!(point.len(), self.n_vars);
        let mut acc = Scalar::zero();
        for (mono, coef) in &self.terms {
            let mut term = coef.clone();
            for &(v, e) in mono {
                if point[v].is_zero() {
                    term = Scalar::zero();
                    break;
                }
                term = &term * &point[v].pow(e);
            }
            if !term.is_zero() {
                acc = &acc + &term;
            }
        }
        acc
    }

    /// The polynomial `f(-x_1, .., -x_n)`.
    pub fn negate_variables(&self) -> PolynomialSpec {
        let mut out = PolynomialSpec::new(self.n_vars);
        for (mono, coef) in &self.terms {
            let total: u32 = mono.iter().map(|&(_, e)| e).sum();
            let c = if total % 2 == 1 { -coef } else { coef.clone() };
            out.add_term(mono, c).unwrap();
        }
        out
    }

    /// Splits a polynomial of degree <= 2 into `x^T A x + b^T x + c` with
    /// `A` symmetric.
    pub fn quadratic_parts(&self) -> Result<(Matrix, Vec<Scalar>, Scalar)> {
        if self.degree > 2 {
            return Err(Error::Precondition(format!(
                "polynomial has degree {}, not quadratic",
                self.degree
            )));
        }
        let n = self.n_vars;
        let mut a = Matrix::zeros(n, n);
        let mut b = vec![Scalar::zero(); n];
        let mut c = Scalar::zero();
        let half = Scalar::from_ratio(1, 2);
        for (mono, coef) in &self.terms {
            match mono.as_slice() {
                [] => c = &c + coef,
                [(v, 1)] => b[*v] = &b[*v] + coef,
                [(v, 2)] => {
                    let cur = a.get(*v, *v) + coef;
                    a.set(*v, *v, cur);
                }
                [(u, 1), (v, 1)] => {
                    let h = coef * &half;
                    let cur = a.get(*u, *v) + &h;
                    a.set(*u, *v, cur);
                    let cur = a.get(*v, *u) + &h;
                    a.set(*v, *u, cur);
                }
                _ => unreachable!("degree-2 polynomial with a higher monomial"),
            }
        }
        Ok((a, b, c))
    }

    /// Precomputed plan for evaluating at sign vectors in {-1, 0, 1} when
    /// every coefficient is a plain integer. `None` when the fast path does
    /// not apply or could overflow.
    fn sign_plan(&self) -> Option<SignPlan> {
        let mut terms = Vec::with_capacity(self.terms.len());
        let mut bound: i128 = 0;
        for (mono, coef) in &self.terms {
            let c = coef.as_i64()?;
            bound += (c as i128).abs();
            let factors: Vec<(usize, bool)> =
                mono.iter().map(|&(v, e)| (v, e % 2 == 1)).collect();
            terms.push((c, factors));
        }
        if bound >= i64::MAX as i128 / 2 {
            return None;
        }
        Some(SignPlan { terms })
    }
}

struct SignPlan {
    terms: Vec<(i64, Vec<(usize, bool)>)>,
}

impl SignPlan {
    fn eval(&self, signs: &[i8]) -> i64 {
        let mut acc: i64 = 0;
        'terms: for (coef, factors) in &self.terms {
            let mut neg = false;
            for &(v, odd) in factors {
                let s = signs[v];
                if s == 0 {
                    continue 'terms;
                }
                if odd && s < 0 {
                    neg = !neg;
                }
            }
            acc += if neg { -coef } else { *coef };
        }
        acc
    }
}

// JSON form: {"n": n, "terms": [{"exps": {"1": 1, "3": 2}, "coef": scalar}]}
// with 1-based variable keys.
impl Serialize for PolynomialSpec {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        struct Term<'a>(&'a Vec<(usize, u32)>, &'a Scalar);
        impl Serialize for Term<'_> {
            fn serialize<S: Serializer>(
                &self,
                serializer: S,
            ) -> std::result::Result<S::Ok, S::Error> {
                let mut st = serializer.serialize_struct("Term", 2)?;
                struct Exps<'a>(&'a Vec<(usize, u32)>);
                impl Serialize for Exps<'_> {
                    fn serialize<S: Serializer>(
                        &self,
                        serializer: S,
                    ) -> std::result::Result<S::Ok, S::Error> {
                        let mut map = serializer.serialize_map(Some(self.0.len()))?;
                        for &(v, e) in self.0 {
                            map.serialize_entry(&(v + 1).to_string(), &e)?;
                        }
                        map.end()
                    }
                }
                st.serialize_field("exps", &Exps(self.0))?;
                st.serialize_field("coef", self.1)?;
                st.end()
            }
        }
        let mut st = serializer.serialize_struct("PolynomialSpec", 2)?;
        st.serialize_field("n", &self.n_vars)?;
        struct Terms<'a>(&'a PolynomialSpec);
        impl Serialize for Terms<'_> {
            fn serialize<S: Serializer>(
                &self,
                serializer: S,
            ) -> std::result::Result<S::Ok, S::Error> {
                let mut seq = serializer.serialize_seq(Some(self.0.terms.len()))?;
                for (mono, coef) in &self.0.terms {
                    seq.serialize_element(&Term(mono, coef))?;
                }
                seq.end()
            }
        }
        st.serialize_field("terms", &Terms(self))?;
        st.end()
    }
}

impl<'de> Deserialize<'de> for PolynomialSpec {
    fn deserialize<D: Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<PolynomialSpec, D::Error> {
        #[derive(Deserialize)]
        struct RawTerm {
            exps: BTreeMap<String, u32>,
            coef: Scalar,
        }
        #[derive(Deserialize)]
        struct Raw {
            n: usize,
            terms: Vec<RawTerm>,
        }
        let raw = Raw::deserialize(deserializer)?;
        let mut p = PolynomialSpec::new(raw.n);
        for t in raw.terms {
            let mut exps = Vec::with_capacity(t.exps.len());
            for (k, e) in t.exps {
                let v: usize = k
                    .parse()
                    .map_err(|_| serde::de::Error::custom(format!("bad variable key {k:?}")))?;
                if v == 0 {
                    return Err(serde::de::Error::custom("variable keys are 1-based"));
                }
                exps.push((v - 1, e));
            }
            p.add_term(&exps, t.coef).map_err(serde::de::Error::custom)?;
        }
        Ok(p)
    }
}

/// Per-coordinate sign distribution.
///
/// Rademacher: -1, +1 each 1/2. Lazy: 0 with probability 1/2, -1 and +1
/// each 1/4. Shifted: `s_i - 1`, `s_i + 1` each 1/2 (so value minus its
/// mean is Rademacher).
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RandomModel {
    Rademacher,
    Lazy,
    Shifted(Vec<Scalar>),
}

impl RandomModel {
    pub fn check_arity(&self, n: usize) -> Result<()> {
        if let RandomModel::Shifted(shifts) = self {
            if shifts.len() != n {
                return Err(Error::DimensionMismatch(format!(
                    "shifted model has {} shifts for {n} variables",
                    shifts.len()
                )));
            }
        }
        Ok(())
    }

    /// Outcome-space size for `n` coordinates.
    pub fn support_size(&self, n: usize) -> Option<u128> {
        let base: u128 = match self {
            RandomModel::Lazy => 3,
            _ => 2,
        };
        base.checked_pow(n as u32)
    }

    fn is_lazy(&self) -> bool {
        matches!(self, RandomModel::Lazy)
    }

    /// Decode outcome index -> sign vector in {-1, 0, +1}; returns the count
    /// of zero coordinates (lazy weight exponent).
    fn decode(&self, n: usize, mut outcome: u128, signs: &mut [i8]) -> u32 {
        let mut zeros = 0;
        if self.is_lazy() {
            for s in signs.iter_mut().take(n) {
                let digit = (outcome % 3) as u8;
                outcome /= 3;
                *s = match digit {
                    0 => {
                        zeros += 1;
                        0
                    }
                    1 => 1,
                    _ => -1,
                };
            }
        } else {
            for s in signs.iter_mut().take(n) {
                *s = if outcome & 1 == 0 { 1 } else { -1 };
                outcome >>= 1;
            }
        }
        zeros
    }

    /// Value of coordinate `i` with sign `s`.
    fn value(&self, i: usize, s: i8) -> Scalar {
        match self {
            RandomModel::Rademacher | RandomModel::Lazy => Scalar::from_int(s as i64),
            RandomModel::Shifted(shifts) => &shifts[i] + &Scalar::from_int(s as i64),
        }
    }

    /// Draw a sign vector; the value of coordinate `i` is `value(i, s_i)`.
    pub fn sample_signs(&self, rng: &mut rand_chacha::ChaCha8Rng, n: usize) -> Vec<i8> {
        use rand::Rng;
        (0..n)
            .map(|_| {
                if self.is_lazy() {
                    match rng.gen_range(0..4u8) {
                        0 | 1 => 0,
                        2 => 1,
                        _ => -1,
                    }
                } else if rng.gen::<bool>() {
                    1
                } else {
                    -1
                }
            })
            .collect()
    }

    /// Per-coordinate support as (value, probability) pairs.
    pub fn coordinate_support(&self, i: usize) -> Vec<(Scalar, Rat)> {
        match self {
            RandomModel::Rademacher => vec![
                (Scalar::from_int(-1), Rat::new(1, 2)),
                (Scalar::from_int(1), Rat::new(1, 2)),
            ],
            RandomModel::Lazy => vec![
                (Scalar::from_int(-1), Rat::new(1, 4)),
                (Scalar::from_int(0), Rat::new(1, 2)),
                (Scalar::from_int(1), Rat::new(1, 4)),
            ],
            RandomModel::Shifted(shifts) => vec![
                (&shifts[i] - &Scalar::one(), Rat::new(1, 2)),
                (&shifts[i] + &Scalar::one(), Rat::new(1, 2)),
            ],
        }
    }
}

impl std::str::FromStr for RandomModel {
    type Err = Error;
    fn from_str(s: &str) -> Result<RandomModel> {
        match s {
            "rademacher" => Ok(RandomModel::Rademacher),
            "lazy" => Ok(RandomModel::Lazy),
            other => Err(Error::Precondition(format!(
                "unknown model {other:?} (shifted models need explicit shifts)"
            ))),
        }
    }
}

/// Exact argmax report: the most likely value and its probability, with
/// ties broken toward the smallest value in the (re, im) lexicographic
/// order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PointProbabilityReport {
    pub argmax: Scalar,
    pub probability: Rat,
}

/// Monte Carlo report for `Pr[f = z]`.
#[derive(Clone, Debug, Serialize)]
pub struct McReport {
    pub hits: u64,
    pub samples: u64,
    pub estimate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub seed: u64,
}

fn check_support(f_vars: usize, model: &RandomModel, caps: &Caps) -> Result<u128> {
    model.check_arity(f_vars)?;
    let size = model
        .support_size(f_vars)
        .ok_or(Error::CapExceeded { needed: u128::MAX, cap: caps.dist_cap })?;
    caps.check_dist(size)?;
    Ok(size)
}

/// Full exact value distribution of `f` under the model, by enumeration of
/// the whole outcome space. Probabilities sum to exactly 1.
pub fn exact_distribution(
    f: &PolynomialSpec,
    model: &RandomModel,
    caps: &Caps,
) -> Result<BTreeMap<Scalar, Rat>> {
    let size = check_support(f.n_vars(), model, caps)?;
    let n = f.n_vars();
    // weight of an outcome with z zero coordinates: 2^z / denom
    let denom: u128 = match model {
        RandomModel::Lazy => 4u128.pow(n as u32),
        _ => size,
    };
    let fast = match model {
        RandomModel::Shifted(_) => None,
        _ => f.sign_plan(),
    };
    let weighted: BTreeMap<Scalar, u128> = if let Some(plan) = &fast {
        let merged = exec::map_reduce(
            size as u64,
            |outcome| {
                let mut signs = vec![0i8; n];
                let zeros = model.decode(n, outcome as u128, &mut signs);
                let mut m = BTreeMap::new();
                m.insert(plan.eval(&signs), 1u128 << zeros);
                m
            },
            BTreeMap::<i64, u128>::new,
            merge_maps,
        );
        merged
            .into_iter()
            .map(|(v, w)| (Scalar::from_int(v), w))
            .collect()
    } else {
        exec::map_reduce(
            size as u64,
            |outcome| {
                let mut signs = vec![0i8; n];
                let zeros = model.decode(n, outcome as u128, &mut signs);
                let point: Vec<Scalar> = (0..n).map(|i| model.value(i, signs[i])).collect();
                let mut m = BTreeMap::new();
                m.insert(f.eval(&point), 1u128 << zeros);
                m
            },
            BTreeMap::<Scalar, u128>::new,
            merge_maps,
        )
    };
    Ok(weighted
        .into_iter()
        .map(|(v, w)| (v, crate::rat::Rat::from_big(big_ratio(w, denom))))
        .collect())
}

fn big_ratio(num: u128, den: u128) -> num_rational::BigRational {
    num_rational::BigRational::new(num_bigint::BigInt::from(num), num_bigint::BigInt::from(den))
}

fn merge_maps<K: Ord>(mut a: BTreeMap<K, u128>, b: BTreeMap<K, u128>) -> BTreeMap<K, u128> {
    for (k, v) in b {
        *a.entry(k).or_insert(0) += v;
    }
    a
}

fn argmax_of(dist: &BTreeMap<Scalar, Rat>) -> PointProbabilityReport {
    let mut best: Option<(&Scalar, &Rat)> = None;
    for (z, p) in dist {
        // ascending key order: strict inequality keeps the smallest argmax
        if best.map_or(true, |(_, bp)| p > bp) {
            best = Some((z, p));
        }
    }
    let (z, p) = best.expect("nonempty distribution");
    PointProbabilityReport {
        argmax: z.clone(),
        probability: p.clone(),
    }
}

/// `sup_z Pr[f = z]` with the maximizing `z`, by full enumeration.
pub fn max_point_probability(
    f: &PolynomialSpec,
    model: &RandomModel,
    caps: &Caps,
) -> Result<PointProbabilityReport> {
    Ok(argmax_of(&exact_distribution(f, model, caps)?))
}

/// Exact value distribution of the linear form `sum coeffs[i] * xi_i` by
/// sequential convolution; handles much larger `n` than full enumeration
/// when the value set stays polynomial.
pub fn linear_value_distribution(
    coeffs: &[Scalar],
    model: &RandomModel,
    caps: &Caps,
) -> Result<BTreeMap<Scalar, Rat>> {
    model.check_arity(coeffs.len())?;
    let mut dist: BTreeMap<Scalar, Rat> = BTreeMap::new();
    dist.insert(Scalar::zero(), Rat::one());
    for (i, c) in coeffs.iter().enumerate() {
        if c.is_zero() && !matches!(model, RandomModel::Shifted(_)) {
            continue;
        }
        let support = model.coordinate_support(i);
        let mut next: BTreeMap<Scalar, Rat> = BTreeMap::new();
        for (v, p) in &dist {
            for (value, w) in &support {
                let nv = v + &(c * value);
                let np = p * w;
                let slot = next.entry(nv).or_insert_with(Rat::zero);
                *slot = &*slot + &np;
            }
        }
        dist = next;
        if dist.len() > caps.value_cap {
            return Err(Error::CapExceeded {
                needed: dist.len() as u128,
                cap: caps.value_cap as u128,
            });
        }
    }
    Ok(dist)
}

/// `sup_z Pr[sum coeffs[i] xi_i = z]` via the convolution DP. Agrees with
/// `max_point_probability` on linear polynomials.
pub fn linear_max_point_probability(
    coeffs: &[Scalar],
    model: &RandomModel,
    caps: &Caps,
) -> Result<PointProbabilityReport> {
    Ok(argmax_of(&linear_value_distribution(coeffs, model, caps)?))
}

/// Unbiased frequency estimate of `Pr[f = z]` with a Wilson interval at the
/// given confidence level (99% default elsewhere). One ChaCha stream per
/// 4096-sample block.
pub fn monte_carlo_point_probability(
    f: &PolynomialSpec,
    z: &Scalar,
    model: &RandomModel,
    samples: u64,
    seed: u64,
    level: ConfidenceLevel,
) -> Result<McReport> {
    if samples == 0 {
        return Err(Error::Precondition("samples must be >= 1".into()));
    }
    model.check_arity(f.n_vars())?;
    let n = f.n_vars();
    let fast = match model {
        RandomModel::Shifted(_) => None,
        _ => f.sign_plan(),
    };
    let fast_target = z.as_i64();
    const CHUNK: u64 = 4096;
    let streams = SeedStreams::new(seed);
    let chunks = samples.div_ceil(CHUNK);
    let hits = exec::map_reduce(
        chunks,
        |chunk| {
            let mut rng = streams.stream(chunk);
            let in_chunk = CHUNK.min(samples - chunk * CHUNK);
            let mut hits = 0u64;
            for _ in 0..in_chunk {
                let signs = model.sample_signs(&mut rng, n);
                let hit = match (&fast, fast_target) {
                    (Some(plan), Some(t)) => plan.eval(&signs) == t,
                    (Some(plan), None) => Scalar::from_int(plan.eval(&signs)) == *z,
                    _ => {
                        let point: Vec<Scalar> =
                            (0..n).map(|i| model.value(i, signs[i])).collect();
                        f.eval(&point) == *z
                    }
                };
                if hit {
                    hits += 1;
                }
            }
            hits
        },
        || 0u64,
        |a, b| a + b,
    );
    let (ci_low, ci_high) = binomial_ci(hits, samples, level);
    Ok(McReport {
        hits,
        samples,
        estimate: hits as f64 / samples as f64,
        ci_low,
        ci_high,
        seed,
    })
}

/// Exact probability, over model-distributed vectors on the last axis, that
/// the collapse of `t` is reducible.
pub fn collapse_reducible_probability(
    t: &Tensor,
    model: &RandomModel,
    caps: &Caps,
) -> Result<Rat> {
    if t.d() < 3 {
        return Err(Error::Domain(
            "collapse-reducibility needs d >= 3 so the collapsed tensor has d >= 2".into(),
        ));
    }
    let m = *t.dims().last().unwrap();
    let size = check_support(m, model, caps)?;
    let denom: u128 = match model {
        RandomModel::Lazy => 4u128.pow(m as u32),
        _ => size,
    };
    let num = exec::map_reduce(
        size as u64,
        |outcome| {
            let mut signs = vec![0i8; m];
            let zeros = model.decode(m, outcome as u128, &mut signs);
            let x: Vec<Scalar> = (0..m).map(|i| model.value(i, signs[i])).collect();
            let collapsed = t.collapse(&x).expect("length checked");
            if collapsed.is_reducible().expect("d >= 2") .is_some() {
                1u128 << zeros
            } else {
                0
            }
        },
        || 0u128,
        |a, b| a + b,
    );
    Ok(Rat::from_big(big_ratio(num, denom)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::Matrix;
    use crate::rat::rat;
    use crate::tensor::stack_slices;

    fn caps() -> Caps {
        Caps::default()
    }

    fn monomial_poly(n: usize, terms: &[(&[usize], i64)]) -> PolynomialSpec {
        let mut p = PolynomialSpec::new(n);
        for (vars, c) in terms {
            let exps: Vec<(usize, u32)> = vars.iter().map(|&v| (v, 1)).collect();
            p.add_term(&exps, Scalar::from_int(*c)).unwrap();
        }
        p
    }

    #[test]
    fn exact_distribution_examples() {
        // f = x1 x2 under Rademacher: {-1: 1/2, 1: 1/2}
        let f = monomial_poly(2, &[(&[0, 1], 1)]);
        let d = exact_distribution(&f, &RandomModel::Rademacher, &caps()).unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(d[&Scalar::from_int(-1)], rat(1, 2));
        assert_eq!(d[&Scalar::from_int(1)], rat(1, 2));

        // f = x1 + x2 + x3: binomial {-3: 1/8, -1: 3/8, 1: 3/8, 3: 1/8}
        let f = monomial_poly(3, &[(&[0], 1), (&[1], 1), (&[2], 1)]);
        let d = exact_distribution(&f, &RandomModel::Rademacher, &caps()).unwrap();
        assert_eq!(d[&Scalar::from_int(-3)], rat(1, 8));
        assert_eq!(d[&Scalar::from_int(-1)], rat(3, 8));

        // f = x1 under the lazy model: {-1: 1/4, 0: 1/2, 1: 1/4}
        let f = monomial_poly(1, &[(&[0], 1)]);
        let d = exact_distribution(&f, &RandomModel::Lazy, &caps()).unwrap();
        assert_eq!(d[&Scalar::from_int(0)], rat(1, 2));
        assert_eq!(d[&Scalar::from_int(1)], rat(1, 4));
        assert_eq!(d[&Scalar::from_int(-1)], rat(1, 4));
    }

    #[test]
    fn distributions_sum_to_one() {
        let f = monomial_poly(4, &[(&[0, 1], 2), (&[2], -1), (&[1, 3], 3)]);
        for model in [RandomModel::Rademacher, RandomModel::Lazy] {
            let d = exact_distribution(&f, &model, &caps()).unwrap();
            let total = d.values().fold(Rat::zero(), |a, b| &a + b);
            assert!(total.is_one());
        }
    }

    #[test]
    fn shifted_model_distribution() {
        // x1 with shift 5: values 4 and 6 each 1/2
        let f = monomial_poly(1, &[(&[0], 1)]);
        let model = RandomModel::Shifted(vec![Scalar::from_int(5)]);
        let d = exact_distribution(&f, &model, &caps()).unwrap();
        assert_eq!(d[&Scalar::from_int(4)], rat(1, 2));
        assert_eq!(d[&Scalar::from_int(6)], rat(1, 2));
    }

    #[test]
    fn argmax_tie_breaks_small() {
        // f = (x1 + x2)^2: values {0: 1/2, 4: 1/2}; tie-break picks 0
        let mut f = PolynomialSpec::new(2);
        f.add_term(&[(0, 2)], Scalar::from_int(1)).unwrap();
        f.add_term(&[(0, 1), (1, 1)], Scalar::from_int(2)).unwrap();
        f.add_term(&[(1, 2)], Scalar::from_int(1)).unwrap();
        let report = max_point_probability(&f, &RandomModel::Rademacher, &caps()).unwrap();
        assert_eq!(report.argmax, Scalar::zero());
        assert_eq!(report.probability, rat(1, 2));
    }

    #[test]
    fn linear_dp_matches_known_values() {
        // all-ones n=10: C(10,5)/2^10 = 63/256
        let coeffs = vec![Scalar::one(); 10];
        let r = linear_max_point_probability(&coeffs, &RandomModel::Rademacher, &caps()).unwrap();
        assert_eq!(r.probability, rat(63, 256));
        assert_eq!(r.argmax, Scalar::zero());

        // powers of two: all 2^10 sums distinct
        let coeffs: Vec<Scalar> = (0..10).map(|i| Scalar::from_int(1 << i)).collect();
        let r = linear_max_point_probability(&coeffs, &RandomModel::Rademacher, &caps()).unwrap();
        assert_eq!(r.probability, rat(1, 1024));

        // a zero coefficient drops out
        let with_zero = vec![
            Scalar::one(),
            Scalar::zero(),
            Scalar::one(),
            Scalar::one(),
        ];
        let without = vec![Scalar::one(); 3];
        let a = linear_max_point_probability(&with_zero, &RandomModel::Rademacher, &caps())
            .unwrap();
        let b = linear_max_point_probability(&without, &RandomModel::Rademacher, &caps()).unwrap();
        assert_eq!(a.probability, b.probability);
    }

    #[test]
    fn linear_dp_agrees_with_enumeration() {
        let coeffs: Vec<Scalar> = vec![1, -2, 3, 5, -1, 2]
            .into_iter()
            .map(Scalar::from_int)
            .collect();
        let mut f = PolynomialSpec::new(6);
        for (i, c) in coeffs.iter().enumerate() {
            f.add_term(&[(i, 1)], c.clone()).unwrap();
        }
        for model in [RandomModel::Rademacher, RandomModel::Lazy] {
            let brute = exact_distribution(&f, &model, &caps()).unwrap();
            let dp = linear_value_distribution(&coeffs, &model, &caps()).unwrap();
            assert_eq!(brute, dp);
        }
    }

    #[test]
    fn monte_carlo_basics() {
        // constant 0 polynomial: estimate exactly 1 at z = 0
        let f = PolynomialSpec::new(3);
        let r = monte_carlo_point_probability(
            &f,
            &Scalar::zero(),
            &RandomModel::Rademacher,
            1000,
            1,
            ConfidenceLevel::P99,
        )
        .unwrap();
        assert_eq!(r.hits, 1000);

        // f = x1 never equals 7
        let f = monomial_poly(1, &[(&[0], 1)]);
        let r = monte_carlo_point_probability(
            &f,
            &Scalar::from_int(7),
            &RandomModel::Rademacher,
            1000,
            1,
            ConfidenceLevel::P99,
        )
        .unwrap();
        assert_eq!(r.hits, 0);
    }

    #[test]
    fn sign_symmetry_under_rademacher() {
        let f = monomial_poly(5, &[(&[0, 1], 1), (&[2], 4), (&[3, 4], -2), (&[1], 1)]);
        let neg = f.negate_variables();
        let a = exact_distribution(&f, &RandomModel::Rademacher, &caps()).unwrap();
        let b = exact_distribution(&neg, &RandomModel::Rademacher, &caps()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn collapse_probability_examples() {
        let always = stack_slices(&[
            Matrix::identity(2),
            Matrix::from_i64(&[&[0, 1], &[1, 0]]),
        ]);
        assert_eq!(
            collapse_reducible_probability(&always, &RandomModel::Rademacher, &caps()).unwrap(),
            Rat::one()
        );
        let never = stack_slices(&[
            Matrix::identity(2),
            Matrix::from_i64(&[&[0, 1], &[0, 0]]),
        ]);
        assert_eq!(
            collapse_reducible_probability(&never, &RandomModel::Rademacher, &caps()).unwrap(),
            Rat::zero()
        );
        let zero = Tensor::zeros(vec![2, 2, 2]);
        assert_eq!(
            collapse_reducible_probability(&zero, &RandomModel::Rademacher, &caps()).unwrap(),
            Rat::one()
        );
    }

    #[test]
    fn quadratic_parts_extraction() {
        // f = 3 x1^2 + 4 x1 x2 - x2 + 7
        let mut f = PolynomialSpec::new(2);
        f.add_term(&[(0, 2)], Scalar::from_int(3)).unwrap();
        f.add_term(&[(0, 1), (1, 1)], Scalar::from_int(4)).unwrap();
        f.add_term(&[(1, 1)], Scalar::from_int(-1)).unwrap();
        f.add_term(&[], Scalar::from_int(7)).unwrap();
        let (a, b, c) = f.quadratic_parts().unwrap();
        assert_eq!(*a.get(0, 0), Scalar::from_int(3));
        assert_eq!(*a.get(0, 1), Scalar::from_int(2));
        assert_eq!(*a.get(1, 0), Scalar::from_int(2));
        assert_eq!(b[1], Scalar::from_int(-1));
        assert_eq!(c, Scalar::from_int(7));
        let mut cubic = PolynomialSpec::new(2);
        cubic.add_term(&[(0, 3)], Scalar::one()).unwrap();
        assert!(cubic.quadratic_parts().is_err());
    }

    #[test]
    fn polynomial_json_round_trip() {
        let f = monomial_poly(4, &[(&[0, 2], 3), (&[1], -1)]);
        let json = serde_json::to_string(&f).unwrap();
        assert!(json.contains("\"exps\""));
        let back: PolynomialSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(f, back);
    }
}
