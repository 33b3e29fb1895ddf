//! Exact verifiers for three decoupling inequalities at small n.
//!
//! Each verifier computes both sides of its inequality by full enumeration
//! in exact rational arithmetic and reports whether `lhs^copies <= rhs`.
//! The right-hand sides use the constructive shift/conditioning witnesses
//! from the inequalities' proofs, not a search over all functions, so a
//! `holds == false` anywhere is a bug, never a tolerance issue.

use serde::Serialize;

use crate::anticonc::{max_point_probability, PolynomialSpec, RandomModel};
use crate::caps::Caps;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rat::Rat;
use crate::scalar::Scalar;

#[derive(Clone, Debug, Serialize)]
pub struct DecouplingReport {
    pub lhs: Rat,
    pub rhs: Rat,
    /// The exponent: `holds` means `lhs^copies <= rhs`.
    pub copies: u32,
    pub holds: bool,
}

fn report(lhs: Rat, rhs: Rat, copies: u32) -> DecouplingReport {
    let holds = lhs.pow(copies) <= rhs;
    DecouplingReport { lhs, rhs, copies, holds }
}

/// Explicit finite two-factor probability space with an event predicate.
#[derive(Clone, Debug)]
pub struct EventTable {
    pub e_weights: Vec<Rat>,
    pub f_weights: Vec<Rat>,
    /// `pred[e][f]`: whether the event holds at that outcome pair.
    pub pred: Vec<Vec<bool>>,
}

impl EventTable {
    fn validate(&self) -> Result<()> {
        let sum_ok = |w: &[Rat]| {
            !w.is_empty()
                && w.iter().all(|p| !p.is_negative())
                && w.iter().fold(Rat::zero(), |a, b| &a + b).is_one()
        };
        if !sum_ok(&self.e_weights) || !sum_ok(&self.f_weights) {
            return Err(Error::Precondition(
                "outcome weights must be nonnegative and sum to 1".into(),
            ));
        }
        if self.pred.len() != self.e_weights.len()
            || self.pred.iter().any(|row| row.len() != self.f_weights.len())
        {
            return Err(Error::Precondition("predicate table shape mismatch".into()));
        }
        Ok(())
    }
}

/// Jensen decoupling with multiple copies:
/// `Pr[E(E,F)] <= Pr[E(E_0,F) and .. and E(E_k,F)]^(1/(k+1))`,
/// verified exactly as `lhs^(k+1) <= rhs`.
pub fn verify_jensen_decoupling(table: &EventTable, k: u32) -> Result<DecouplingReport> {
    table.validate()?;
    let mut lhs = Rat::zero();
    let mut rhs = Rat::zero();
    for (fi, wf) in table.f_weights.iter().enumerate() {
        let mut conditional = Rat::zero();
        for (ei, we) in table.e_weights.iter().enumerate() {
            if table.pred[ei][fi] {
                conditional = &conditional + we;
            }
        }
        lhs = &lhs + &(wf * &conditional);
        rhs = &rhs + &(wf * &conditional.pow(k + 1));
    }
    Ok(report(lhs, rhs, k + 1))
}

fn validate_partition(n: usize, sets: &[&[usize]]) -> Result<()> {
    let mut seen = vec![false; n];
    for set in sets {
        if set.is_empty() {
            return Err(Error::Precondition("partition parts must be nonempty".into()));
        }
        for &v in *set {
            if v >= n {
                return Err(Error::IndexOutOfRange { index: v, limit: n });
            }
            if seen[v] {
                return Err(Error::Precondition(format!("index {v} in two parts")));
            }
            seen[v] = true;
        }
    }
    if seen.iter().any(|s| !s) {
        return Err(Error::Precondition("partition must cover all variables".into()));
    }
    Ok(())
}

fn dot(u: &[Scalar], v: &[Scalar]) -> Scalar {
    let mut acc = Scalar::zero();
    for (a, b) in u.iter().zip(v) {
        if !a.is_zero() && !b.is_zero() {
            acc = &acc + &(a * b);
        }
    }
    acc
}

/// `u^T M v`.
fn bilinear(u: &[Scalar], m: &Matrix, v: &[Scalar]) -> Scalar {
    let mut acc = Scalar::zero();
    for (i, ui) in u.iter().enumerate() {
        if ui.is_zero() {
            continue;
        }
        let row = dot(m.row(i), v);
        if !row.is_zero() {
            acc = &acc + &(ui * &row);
        }
    }
    acc
}

/// All vectors in `{-1, +1}^len`, bit 0 of the index driving coordinate 0.
fn sign_vectors(len: usize) -> impl Iterator<Item = Vec<Scalar>> {
    (0..(1u64 << len)).map(move |mask| {
        (0..len)
            .map(|j| Scalar::from_int(if mask >> j & 1 == 0 { 1 } else { -1 }))
            .collect()
    })
}

/// All vectors in `{-1, 0, +1}^len` with their lazy-Rademacher weights.
fn lazy_vectors(len: usize) -> Vec<(Vec<Scalar>, Rat)> {
    let mut out = Vec::with_capacity(3usize.pow(len as u32));
    let total = 3u64.pow(len as u32);
    for mut code in 0..total {
        let mut v = Vec::with_capacity(len);
        let mut weight = Rat::one();
        for _ in 0..len {
            let digit = code % 3;
            code /= 3;
            let (value, w) = match digit {
                0 => (0, Rat::new(1, 2)),
                1 => (1, Rat::new(1, 4)),
                _ => (-1, Rat::new(1, 4)),
            };
            v.push(Scalar::from_int(value));
            weight = &weight * &w;
        }
        out.push((v, weight));
    }
    out
}

/// Multi-copy quadratic decoupling along a bipartition `X | Y`:
/// `sup_z Pr[f(xi) = z]^(k+1) <= max_x Pr[all k shifted copies satisfy
/// alpha^T A[X,Y] xi[Y] = psi(alpha)]`, with `psi` built from the proof's
/// explicit `psi_0` at the maximizing shift `x`.
pub fn verify_quadratic_decoupling(
    f: &PolynomialSpec,
    x_set: &[usize],
    y_set: &[usize],
    k: u32,
    caps: &Caps,
) -> Result<DecouplingReport> {
    let n = f.n_vars();
    validate_partition(n, &[x_set, y_set])?;
    if k == 0 {
        return Err(Error::Precondition("need at least one copy (k >= 1)".into()));
    }
    let (a, b, _) = f.quadratic_parts()?;
    let needed = (1u128 << (x_set.len() + y_set.len()))
        .max(1u128 << (x_set.len() as u32 * (k + 1) + y_set.len() as u32));
    caps.check_dist(needed)?;

    let lhs = max_point_probability(f, &RandomModel::Rademacher, caps)?.probability;

    let a_xx = a.submatrix(x_set, x_set)?;
    let a_xy = a.submatrix(x_set, y_set)?;
    let b_x: Vec<Scalar> = x_set.iter().map(|&i| b[i].clone()).collect();
    let half = Scalar::from_ratio(1, 2);

    // psi0(x, w) = (w^T A[X,X] w - x^T A[X,X] x + b[X]^T (w - x)) / 2
    let psi0 = |x: &[Scalar], w: &[Scalar]| -> Scalar {
        let quad = &bilinear(w, &a_xx, w) - &bilinear(x, &a_xx, x);
        let diff: Vec<Scalar> = w.iter().zip(x).map(|(wi, xi)| wi - xi).collect();
        &(&quad + &dot(&b_x, &diff)) * &half
    };

    let y_count = 1u64 << y_set.len();
    let x_count = 1u64 << x_set.len();
    let mut rhs = Rat::zero();
    for x in sign_vectors(x_set.len()) {
        // Per outcome of xi[Y], the k copies are i.i.d.: the joint
        // probability is E_y[q(y)^k] with
        // q(y) = Pr_w[(w - x)^T A[X,Y] y + psi0(x, w) = 0].
        let mut total = Rat::zero();
        for y in sign_vectors(y_set.len()) {
            let mut hits = 0u64;
            for w in sign_vectors(x_set.len()) {
                let alpha: Vec<Scalar> = w.iter().zip(&x).map(|(wi, xi)| wi - xi).collect();
                let lhs_val = &bilinear(&alpha, &a_xy, &y) + &psi0(&x, &w);
                if lhs_val.is_zero() {
                    hits += 1;
                }
            }
            let q = Rat::from_big(num_rational::BigRational::new(
                num_bigint::BigInt::from(hits),
                num_bigint::BigInt::from(x_count),
            ));
            total = &total + &q.pow(k);
        }
        let prob = &total / &Rat::from_int(y_count as i64);
        rhs = rhs.max(prob);
    }
    Ok(report(lhs, rhs, k + 1))
}

/// Triple decoupling along `X | Y | Z` with lazy Rademacher `alpha`, `beta`
/// and Rademacher `gamma`:
/// `sup_z Pr[f(xi) = z]^4 <= Pr[alpha^T A[X,Y] beta = 0,
/// alpha^T A[X,Z] gamma = phi(alpha,beta), beta^T A[Y,Z] gamma =
/// psi(alpha,beta)]` with `phi`, `psi` built from the proof's `phi_1`,
/// `psi_1` at per-(alpha, beta) maximizing conditioning choices.
pub fn verify_triple_decoupling(
    f: &PolynomialSpec,
    x_set: &[usize],
    y_set: &[usize],
    z_set: &[usize],
    caps: &Caps,
) -> Result<DecouplingReport> {
    let n = f.n_vars();
    validate_partition(n, &[x_set, y_set, z_set])?;
    if x_set.len() > 3 || y_set.len() > 3 || z_set.len() > 3 {
        return Err(Error::Precondition(
            "triple decoupling verifier enumerates exhaustively; parts must have size <= 3"
                .into(),
        ));
    }
    caps.check_dist(1u128 << n)?;
    let (a, b, _) = f.quadratic_parts()?;

    let lhs = max_point_probability(f, &RandomModel::Rademacher, caps)?.probability;

    let a_xx = a.submatrix(x_set, x_set)?;
    let a_yy = a.submatrix(y_set, y_set)?;
    let a_xy = a.submatrix(x_set, y_set)?;
    let a_xz = a.submatrix(x_set, z_set)?;
    let a_yz = a.submatrix(y_set, z_set)?;
    let a_yx = a.submatrix(y_set, x_set)?;
    let b_x: Vec<Scalar> = x_set.iter().map(|&i| b[i].clone()).collect();
    let b_y: Vec<Scalar> = y_set.iter().map(|&i| b[i].clone()).collect();
    let quarter = Scalar::from_ratio(1, 4);

    // phi0(u, u') = u^T A[X,X] u - u'^T A[X,X] u' + b[X]^T (u - u')
    let phi0 = |u: &[Scalar], u2: &[Scalar]| -> Scalar {
        let diff: Vec<Scalar> = u.iter().zip(u2).map(|(p, q)| p - q).collect();
        &(&bilinear(u, &a_xx, u) - &bilinear(u2, &a_xx, u2)) + &dot(&b_x, &diff)
    };
    let psi0 = |v: &[Scalar], v2: &[Scalar]| -> Scalar {
        let diff: Vec<Scalar> = v.iter().zip(v2).map(|(p, q)| p - q).collect();
        &(&bilinear(v, &a_yy, v) - &bilinear(v2, &a_yy, v2)) + &dot(&b_y, &diff)
    };

    let two = Scalar::from_int(2);
    let z_count = 1u64 << z_set.len();
    let gammas: Vec<Vec<Scalar>> = sign_vectors(z_set.len()).collect();

    let mut rhs = Rat::zero();
    for (alpha, w_alpha) in lazy_vectors(x_set.len()) {
        for (beta, w_beta) in lazy_vectors(y_set.len()) {
            if !bilinear(&alpha, &a_xy, &beta).is_zero() {
                continue;
            }
            // Conditioning choices compatible with (alpha, beta):
            // u' = x with x_j = -alpha_j where alpha_j != 0, else free.
            let mut best_q = Rat::zero();
            for x in compatible_shifts(&alpha) {
                let u: Vec<Scalar> = x.iter().zip(&alpha).map(|(xi, ai)| xi + &(&two * ai)).collect();
                for y in compatible_shifts(&beta) {
                    let v: Vec<Scalar> =
                        y.iter().zip(&beta).map(|(yi, bi)| yi + &(&two * bi)).collect();
                    // phi1 = -alpha^T A[X,Y] v' - phi0(u, u')/4
                    let phi1 = &(-&bilinear(&alpha, &a_xy, &y)) - &(&phi0(&u, &x) * &quarter);
                    let psi1 = &(-&bilinear(&beta, &a_yx, &u)) - &(&psi0(&v, &y) * &quarter);
                    let mut hits = 0u64;
                    for gamma in &gammas {
                        if bilinear(&alpha, &a_xz, gamma) == phi1
                            && bilinear(&beta, &a_yz, gamma) == psi1
                        {
                            hits += 1;
                        }
                    }
                    let q = Rat::new(hits as i64, z_count as i64);
                    best_q = best_q.max(q);
                }
            }
            rhs = &rhs + &(&(&w_alpha * &w_beta) * &best_q);
        }
    }
    Ok(report(lhs, rhs, 4))
}

/// All `x` in `{-1, +1}^len` with `x_j = -alpha_j` wherever `alpha_j != 0`.
fn compatible_shifts(alpha: &[Scalar]) -> Vec<Vec<Scalar>> {
    let free: Vec<usize> = alpha
        .iter()
        .enumerate()
        .filter(|(_, a)| a.is_zero())
        .map(|(j, _)| j)
        .collect();
    let mut out = Vec::with_capacity(1 << free.len());
    for mask in 0..(1u64 << free.len()) {
        let mut x: Vec<Scalar> = alpha.iter().map(|a| -a).collect();
        for (bit, &j) in free.iter().enumerate() {
            x[j] = Scalar::from_int(if mask >> bit & 1 == 0 { 1 } else { -1 });
        }
        out.push(x);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::rat;

    fn caps() -> Caps {
        Caps::default()
    }

    #[test]
    fn jensen_always_true_event() {
        let table = EventTable {
            e_weights: vec![rat(1, 2), rat(1, 2)],
            f_weights: vec![rat(1, 3), rat(2, 3)],
            pred: vec![vec![true, true], vec![true, true]],
        };
        let r = verify_jensen_decoupling(&table, 2).unwrap();
        assert_eq!((r.lhs, r.rhs), (Rat::one(), Rat::one()));
        assert!(r.holds);
    }

    #[test]
    fn jensen_equality_case() {
        // E = {E = F} on uniform 2-point spaces, k = 1:
        // lhs = 1/2, rhs = sum_F (1/2)(1/2)^2 = 1/4 = lhs^2.
        let table = EventTable {
            e_weights: vec![rat(1, 2), rat(1, 2)],
            f_weights: vec![rat(1, 2), rat(1, 2)],
            pred: vec![vec![true, false], vec![false, true]],
        };
        let r = verify_jensen_decoupling(&table, 1).unwrap();
        assert_eq!(r.lhs, rat(1, 2));
        assert_eq!(r.rhs, rat(1, 4));
        assert!(r.holds);
        assert_eq!(r.lhs.pow(2), r.rhs);
    }

    #[test]
    fn jensen_rejects_malformed() {
        let table = EventTable {
            e_weights: vec![rat(1, 2)],
            f_weights: vec![rat(1, 2), rat(1, 2)],
            pred: vec![vec![true, true]],
        };
        assert!(verify_jensen_decoupling(&table, 1).is_err());
    }

    #[test]
    fn quadratic_single_product() {
        // f = x1 x2, X = {0}, Y = {1}, k = 1: lhs = 1/2, rhs = 1/2.
        let mut f = PolynomialSpec::new(2);
        f.add_term(&[(0, 1), (1, 1)], Scalar::one()).unwrap();
        let r = verify_quadratic_decoupling(&f, &[0], &[1], 1, &caps()).unwrap();
        assert_eq!(r.lhs, rat(1, 2));
        assert_eq!(r.rhs, rat(1, 2));
        assert!(r.holds);
    }

    #[test]
    fn quadratic_linear_only() {
        // A[X,Y] = 0: the event degenerates to psi(alpha) = 0 at the
        // maximizing shift; the inequality still holds.
        let mut f = PolynomialSpec::new(3);
        f.add_term(&[(0, 1)], Scalar::from_int(2)).unwrap();
        f.add_term(&[(2, 1)], Scalar::from_int(-1)).unwrap();
        let r = verify_quadratic_decoupling(&f, &[0, 1], &[2], 2, &caps()).unwrap();
        assert!(r.holds);
    }

    #[test]
    fn triple_zero_polynomial() {
        let f = PolynomialSpec::new(3);
        let r = verify_triple_decoupling(&f, &[0], &[1], &[2], &caps()).unwrap();
        assert_eq!((r.lhs, r.rhs), (Rat::one(), Rat::one()));
        assert!(r.holds);
    }

    #[test]
    fn triple_symmetric_quadratic() {
        // f = x1 x2 + x2 x3 + x1 x3 with singleton parts
        let mut f = PolynomialSpec::new(3);
        f.add_term(&[(0, 1), (1, 1)], Scalar::one()).unwrap();
        f.add_term(&[(1, 1), (2, 1)], Scalar::one()).unwrap();
        f.add_term(&[(0, 1), (2, 1)], Scalar::one()).unwrap();
        let r = verify_triple_decoupling(&f, &[0], &[1], &[2], &caps()).unwrap();
        assert!(r.holds, "lhs={} rhs={}", r.lhs, r.rhs);
    }

    #[test]
    fn triple_rejects_oversized_parts() {
        let f = PolynomialSpec::new(9);
        let err = verify_triple_decoupling(
            &f,
            &[0, 1, 2, 3],
            &[4, 5],
            &[6, 7, 8],
            &caps(),
        );
        assert!(err.is_err());
    }
}
