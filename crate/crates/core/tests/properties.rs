//! Property suites for the library invariants, with independent oracles
//! where a dual route exists.

mod common;

use common::{naive_det, naive_is_reducible, naive_rank, seeded_matrix};
use proptest::prelude::*;

use smallball_core::anticonc::{
    exact_distribution, linear_max_point_probability, linear_value_distribution,
    max_point_probability, PolynomialSpec, RandomModel,
};
use smallball_core::caps::Caps;
use smallball_core::constructions::{make_random_low_rank, make_random_rank1_tensor};
use smallball_core::fractions::{singular_fraction, FractionMode};
use smallball_core::gap::{gap_contains, minimal_cover, CoverQuery, SymmetricGAP};
use smallball_core::matrix::Matrix;
use smallball_core::rat::{rat, Rat};
use smallball_core::repair::tensor_repair;
use smallball_core::rng::SeedStreams;
use smallball_core::scalar::Scalar;
use smallball_core::stats::ConfidenceLevel;
use smallball_core::tensor::{AxisPartition, Tensor};
use smallball_core::testers::{exact_irreducible_fraction, tensor_reducibility_tester, TesterConfig};

fn caps() -> Caps {
    Caps::default()
}

// ---------------------------------------------------------------- scalars

proptest! {
    #[test]
    fn rational_field_axioms(an in -50i64..50, ad in 1i64..20, bn in -50i64..50, bd in 1i64..20) {
        let a = rat(an, ad);
        let b = rat(bn, bd);
        prop_assert_eq!(&a + &b, &b + &a);
        prop_assert_eq!(&(&a - &b) + &b, a.clone());
        if !b.is_zero() {
            prop_assert_eq!(&(&a / &b) * &b, a.clone());
        }
    }

    #[test]
    fn scalar_field_axioms(ar in -9i64..9, ai in -9i64..9, br in -9i64..9, bi in -9i64..9) {
        let a = Scalar::new(rat(ar, 1), rat(ai, 1));
        let b = Scalar::new(rat(br, 1), rat(bi, 1));
        prop_assert_eq!(&a * &b, &b * &a);
        if !b.is_zero() {
            prop_assert_eq!(&(&a / &b) * &b, a.clone());
        }
    }
}

// ----------------------------------------------------------- exact linalg

#[test]
fn det_matches_cofactor_oracle() {
    for seed in 0..200 {
        let n = 1 + (seed as usize % 5);
        let m = seeded_matrix(n, n, seed);
        assert_eq!(m.det().unwrap(), naive_det(&m), "seed {seed}");
    }
}

#[test]
fn rank_matches_minor_oracle_and_det() {
    // det and rank agree: rank(M) = n iff det(M) != 0
    for seed in 0..150 {
        let n = 1 + (seed as usize % 6);
        let m = seeded_matrix(n, n, seed + 1000);
        let rank = m.rank();
        assert_eq!(rank, naive_rank(&m), "seed {seed}");
        assert_eq!(rank == n, !m.det().unwrap().is_zero(), "seed {seed}");
    }
}

#[test]
fn sampled_fraction_covers_exact_value() {
    // For a fixed small matrix the sampled estimate's 99% Wilson interval
    // must contain the exact fraction in at least 95% of 1000 seeds.
    let m = Matrix::identity(6);
    let exact = singular_fraction(&m, 2, FractionMode::Exact, &caps())
        .unwrap()
        .nonsingular_fraction()
        .to_f64();
    let mut covered = 0;
    for seed in 0..1000u64 {
        let stats = singular_fraction(
            &m,
            2,
            FractionMode::Sampled { samples: 500, seed },
            &caps(),
        )
        .unwrap();
        let (lo, hi) = stats.confidence_interval(ConfidenceLevel::P99).unwrap();
        if lo <= exact && exact <= hi {
            covered += 1;
        }
    }
    assert!(covered >= 950, "only {covered}/1000 intervals covered the exact value");
}

// ---------------------------------------------------------------- tensors

#[test]
fn factorization_reproduces_reducible_tensors() {
    // 500 constructed rank-1 tensors: the constructive factorization from
    // the rank-1 flattening reproduces the tensor exactly (after restoring
    // axis order), for every witnessing partition.
    for seed in 0..500u64 {
        let d = 2 + (seed as usize % 3);
        let dims: Vec<usize> = (0..d).map(|a| 2 + ((seed as usize + a) % 3)).collect();
        let t = make_random_rank1_tensor(&dims, seed, 0).unwrap();
        let p = t.is_reducible().unwrap().expect("rank-1 tensors are reducible");
        let (t1, t2) = t.factor_wrt(&p).unwrap().unwrap();
        let mut axes: Vec<usize> = p.side1().to_vec();
        axes.extend_from_slice(p.side2());
        // invert the permutation: product axes are (side1, side2)
        let mut inverse = vec![0usize; axes.len()];
        for (pos, &axis) in axes.iter().enumerate() {
            inverse[pos] = axis;
        }
        let reproduced = t1.tensor_product(&t2).permute_axes(&inverse_perm(&inverse));
        assert_eq!(reproduced, t, "seed {seed}");
    }
}

fn inverse_perm(perm: &[usize]) -> Vec<usize> {
    // permute_axes takes `perm[k]` = input axis landing at output axis k;
    // the product has input axis order (side1, side2) = `perm` as given,
    // so we need the map sending output slot k to where axis k currently is.
    let mut out = vec![0usize; perm.len()];
    for (pos, &axis) in perm.iter().enumerate() {
        out[axis] = pos;
    }
    out
}

#[test]
fn corrupted_rank1_tensors_repair_back_to_reducible() {
    // <= 5% corrupted entries, then repaired; outputs factor exactly
    let mut repaired = 0;
    for seed in 0..60u64 {
        let t = make_random_rank1_tensor(&[4, 4, 4], seed, 2).unwrap();
        if let Some(out) = tensor_repair(&t, &rat(1, 8), seed, &caps())
            .unwrap()
            .into_option()
        {
            let p = out.output.is_reducible().unwrap().expect("repair output is reducible");
            let (t1, t2) = out.output.factor_wrt(&p).unwrap().unwrap();
            let mut axes: Vec<usize> = p.side1().to_vec();
            axes.extend_from_slice(p.side2());
            let reproduced = t1.tensor_product(&t2).permute_axes(&inverse_perm(&axes));
            assert_eq!(reproduced, out.output, "seed {seed}");
            repaired += 1;
        }
    }
    assert!(repaired >= 55, "only {repaired}/60 corrupted tensors repaired");
}

#[test]
fn product_flattenings_have_rank_at_most_one() {
    for seed in 0..100u64 {
        let d1 = 1 + (seed as usize % 2);
        let d2 = 1 + ((seed / 2) as usize % 2);
        let dims1: Vec<usize> = (0..d1).map(|a| 2 + ((seed as usize + a) % 2)).collect();
        let dims2: Vec<usize> = (0..d2).map(|a| 2 + ((seed as usize + a + 1) % 2)).collect();
        let t1 = make_random_rank1_tensor(&dims1, seed * 2 + 1, 1).unwrap(); // any tensor works
        let t2 = make_random_rank1_tensor(&dims2, seed * 2 + 2, 1).unwrap();
        let t = t1.tensor_product(&t2);
        let aligned: Vec<usize> = (0..d1).collect();
        let p = AxisPartition::new(d1 + d2, &aligned).unwrap();
        assert!(t.flatten(&p).unwrap().rank() <= 1, "seed {seed}");
        assert!(t.is_reducible_wrt(&p).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn collapse_is_linear(seed in 0u64..5000, xs in prop::collection::vec(-4i64..=4, 3), ys in prop::collection::vec(-4i64..=4, 3)) {
        let t = make_random_rank1_tensor(&[3, 3, 3], seed, 4).unwrap();
        let x: Vec<Scalar> = xs.iter().map(|&v| Scalar::from_int(v)).collect();
        let y: Vec<Scalar> = ys.iter().map(|&v| Scalar::from_int(v)).collect();
        let sum: Vec<Scalar> = x.iter().zip(&y).map(|(a, b)| a + b).collect();
        let lhs = {
            let cx = t.collapse(&x).unwrap();
            let cy = t.collapse(&y).unwrap();
            Tensor::from_fn(cx.dims().to_vec(), |idx| cx.get(idx) + cy.get(idx))
        };
        prop_assert_eq!(lhs, t.collapse(&sum).unwrap());
    }

    #[test]
    fn collapse_commutes_with_subtensor(seed in 0u64..5000) {
        // subtensor(collapse(T, x), S_1..S_{d-1})
        //   = collapse(subtensor(T, S_1..S_{d-1}, full), x)
        let t = make_random_rank1_tensor(&[4, 4, 3], seed, 3).unwrap();
        let x: Vec<Scalar> = vec![Scalar::from_int(1), Scalar::from_int(-2), Scalar::from_int(1)];
        let s1 = vec![0usize, 2];
        let s2 = vec![1usize, 3];
        let via_collapse = t
            .collapse(&x)
            .unwrap()
            .subtensor(&[s1.clone(), s2.clone()])
            .unwrap();
        let via_subtensor = t
            .subtensor(&[s1, s2, vec![0, 1, 2]])
            .unwrap()
            .collapse(&x)
            .unwrap();
        prop_assert_eq!(via_collapse, via_subtensor);
    }
}

#[test]
fn reducibility_matches_naive_oracle() {
    for seed in 0..40u64 {
        let t = make_random_rank1_tensor(&[2, 2, 2], seed, (seed % 3) as usize).unwrap();
        assert_eq!(
            t.is_reducible().unwrap().is_some(),
            naive_is_reducible(&t),
            "seed {seed}"
        );
    }
}

// ----------------------------------------------------------- testers

#[test]
fn tester_sampled_fraction_concentrates() {
    // Sampled irreducible fraction at 2000 samples stays within 0.05 of
    // the exact fraction in at least 99% of 10^4 seeds.
    let base = make_random_rank1_tensor(&[6, 6], 3, 3).unwrap();
    let t = Tensor::from_entries(base.dims().to_vec(), base.entries().to_vec()).unwrap();
    let exact = exact_irreducible_fraction(&t, 2, &caps()).unwrap().to_f64();
    let mut config = TesterConfig::new(2000, 0, rat(1, 4));
    config.side = Some(2);
    let mut outliers = 0;
    for seed in 0..10_000u64 {
        config.seed = seed;
        let v = tensor_reducibility_tester(&t, &config).unwrap();
        let observed = v.observed_bad_fraction.to_f64();
        if (observed - exact).abs() > 0.05 {
            outliers += 1;
        }
    }
    assert!(outliers < 100, "{outliers}/10000 seeds deviated by more than 0.05");
}

// ----------------------------------------------------- anticoncentration

#[test]
fn linear_dp_equals_enumeration_all_models() {
    let streams = SeedStreams::new(99);
    for case in 0..30u64 {
        use rand::Rng;
        let mut rng = streams.stream(case);
        let model = match case % 3 {
            0 => RandomModel::Rademacher,
            1 => RandomModel::Lazy,
            _ => RandomModel::Shifted(vec![]),
        };
        let n = match model {
            RandomModel::Lazy => 2 + (rng.gen_range(0..8usize)),
            _ => 2 + (rng.gen_range(0..13usize)), // up to n = 14
        };
        let model = match model {
            RandomModel::Shifted(_) => RandomModel::Shifted(
                (0..n).map(|_| Scalar::from_int(rng.gen_range(-2..=2))).collect(),
            ),
            m => m,
        };
        let coeffs: Vec<Scalar> =
            (0..n).map(|_| Scalar::from_int(rng.gen_range(-3..=3))).collect();
        let mut f = PolynomialSpec::new(n);
        for (i, c) in coeffs.iter().enumerate() {
            f.add_term(&[(i, 1)], c.clone()).unwrap();
        }
        let brute = exact_distribution(&f, &model, &caps()).unwrap();
        let dp = linear_value_distribution(&coeffs, &model, &caps()).unwrap();
        assert_eq!(brute, dp, "case {case} n {n}");
        let a = max_point_probability(&f, &model, &caps()).unwrap();
        let b = linear_max_point_probability(&coeffs, &model, &caps()).unwrap();
        assert_eq!((a.argmax, a.probability), (b.argmax, b.probability), "case {case}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]
    #[test]
    fn distributions_always_sum_to_one(seed in 0u64..10_000, lazy in proptest::bool::ANY) {
        let m = make_random_low_rank(4, 2, seed, 2, false).unwrap();
        let mut f = PolynomialSpec::new(4);
        for i in 0..4 {
            for j in 0..4 {
                if !m.get(i, j).is_zero() {
                    let exps = if i == j { vec![(i, 2)] } else { vec![(i, 1), (j, 1)] };
                    f.add_term(&exps, m.get(i, j).clone()).unwrap();
                }
            }
        }
        let model = if lazy { RandomModel::Lazy } else { RandomModel::Rademacher };
        let dist = exact_distribution(&f, &model, &caps()).unwrap();
        let total = dist.values().fold(Rat::zero(), |a, b| &a + b);
        prop_assert!(total.is_one());
    }

    #[test]
    fn rademacher_distribution_is_sign_symmetric(seed in 0u64..10_000) {
        let m = make_random_low_rank(5, 2, seed, 3, false).unwrap();
        let mut f = PolynomialSpec::new(5);
        for i in 0..5 {
            for j in 0..5 {
                if !m.get(i, j).is_zero() && (i + j) % 2 == 0 {
                    f.add_term(&[(i, 1), (j, 1)], m.get(i, j).clone()).unwrap();
                }
            }
        }
        f.add_term(&[(0, 1)], Scalar::from_int(1)).unwrap();
        let a = exact_distribution(&f, &RandomModel::Rademacher, &caps()).unwrap();
        let b = exact_distribution(&f.negate_variables(), &RandomModel::Rademacher, &caps()).unwrap();
        prop_assert_eq!(a, b);
    }
}

// ------------------------------------------------------------------- gap

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn gap_membership_negation_symmetric(
        g1 in -4i64..=4, g2 in -4i64..=4, h1 in -4i64..=4, h2 in -4i64..=4,
        n1 in 0u64..3, n2 in 0u64..3, u1 in -6i64..=6, u2 in -6i64..=6
    ) {
        let gap = SymmetricGAP {
            generators: vec![
                vec![Scalar::from_int(g1), Scalar::from_int(g2)],
                vec![Scalar::from_int(h1), Scalar::from_int(h2)],
            ],
            bounds: vec![n1, n2],
        };
        let u = vec![Scalar::from_int(u1), Scalar::from_int(u2)];
        let nu = vec![Scalar::from_int(-u1), Scalar::from_int(-u2)];
        prop_assert_eq!(
            gap_contains(&gap, &u, &caps()).unwrap(),
            gap_contains(&gap, &nu, &caps()).unwrap()
        );
    }
}

#[test]
fn cover_minimality_matches_exhaustive_rescan() {
    // tiny instances: <= 6 values, generator bound <= 8; the returned
    // cover's volume must match a brute-force scan over the same candidate
    // space that checks coverage purely through gap_contains
    let streams = SeedStreams::new(5);
    for case in 0..25u64 {
        use rand::Rng;
        let mut rng = streams.stream(case);
        let count = rng.gen_range(2..=5usize);
        let values: Vec<Vec<Scalar>> = (0..count)
            .map(|_| vec![Scalar::from_int(rng.gen_range(-6..=6i64))])
            .collect();
        let outliers = rng.gen_range(0..=1usize);
        let query = CoverQuery {
            values: values.clone(),
            max_rank: 1,
            outliers_allowed: outliers,
            generator_bound: 6,
            volume_cap: 200,
        };
        let found = minimal_cover(&query, &caps()).unwrap();
        let oracle = brute_force_rank1_cover(&values, outliers, 6, 200);
        match (found, oracle) {
            (Some(cover), Some(best_volume)) => {
                assert_eq!(cover.volume, best_volume, "case {case}");
            }
            (None, None) => {}
            (a, b) => panic!("case {case}: search {a:?} vs oracle {b:?} disagree on feasibility"),
        }
    }
}

/// Oracle: scan the same rank-1 candidate space (value and difference
/// submultiples), but decide coverage only through `gap_contains`.
fn brute_force_rank1_cover(
    values: &[Vec<Scalar>],
    outliers: usize,
    bound: u64,
    volume_cap: u128,
) -> Option<u128> {
    let nonzero = values.iter().filter(|v| !v.iter().all(Scalar::is_zero)).count();
    if nonzero <= outliers {
        return Some(1);
    }
    let mut candidates: Vec<Vec<Scalar>> = Vec::new();
    for v in values {
        candidates.push(v.clone());
    }
    for i in 0..values.len() {
        for j in i + 1..values.len() {
            let diff: Vec<Scalar> = values[i].iter().zip(&values[j]).map(|(a, b)| a - b).collect();
            candidates.push(diff);
        }
    }
    let mut best: Option<u128> = None;
    for base in candidates {
        if base.iter().all(Scalar::is_zero) {
            continue;
        }
        for m in 1..=bound {
            let scale = Scalar::from_ratio(1, m as i64);
            let generator: Vec<Scalar> = base.iter().map(|x| x * &scale).collect();
            for n in 0..=((volume_cap - 1) / 2).min(64) {
                let gap = SymmetricGAP { generators: vec![generator.clone()], bounds: vec![n] };
                let missed = values
                    .iter()
                    .filter(|u| !gap_contains(&gap, u, &caps()).unwrap())
                    .count();
                if missed <= outliers {
                    let vol = 2 * n as u128 + 1;
                    if best.map_or(true, |b| vol < b) {
                        best = Some(vol);
                    }
                    break; // larger N only increases volume
                }
            }
        }
    }
    best.filter(|&v| v <= volume_cap)
}
