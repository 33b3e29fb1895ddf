//! Desk-scale experiment tables. Every table is a deterministic function of
//! (command line, seed); the wall_time_ms column is measurement output and
//! is excluded from that bit-exactness contract.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::time::Instant;

use anyhow::{bail, Context, Result};

use smallball_core::anticonc::{
    linear_value_distribution, max_point_probability, monte_carlo_point_probability,
    PolynomialSpec, RandomModel,
};
use smallball_core::caps::Caps;
use smallball_core::constructions::{
    counterexample_parts, make_counterexample, make_power_sum, make_random_low_rank,
    make_random_rank1_tensor,
};
use smallball_core::matrix::Matrix;
use smallball_core::rat::Rat;
use smallball_core::scalar::Scalar;
use smallball_core::stats::ConfidenceLevel;
use smallball_core::testers::{tensor_reducibility_tester, Decision, TesterConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScalingKind {
    Counterexample,
    PowerSum,
    RandomQuadraticRank(usize),
}

impl ScalingKind {
    fn name(&self) -> String {
        match self {
            ScalingKind::Counterexample => "counterexample".into(),
            ScalingKind::PowerSum => "power-sum".into(),
            ScalingKind::RandomQuadraticRank(r) => format!("random-quadratic-rank({r})"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Exact,
    Mc { samples: u64 },
}

/// One row of the scaling table, before formatting.
pub struct ScalingRow {
    pub n: usize,
    pub rho: RhoValue,
    pub wall_ms: u128,
}

pub enum RhoValue {
    Exact(Rat),
    Estimate { value: f64, ci_low: f64, ci_high: f64 },
}

/// Exact `Pr[f = 0]` for the product-difference family, through the
/// independence of the linear factors: both d-fold products are i.i.d., so
/// the collision probability is the sum of squared product probabilities.
pub fn counterexample_zero_probability(
    n: usize,
    d: usize,
    model: &RandomModel,
    caps: &Caps,
) -> Result<Rat> {
    let parts = counterexample_parts(n, d).context("building variable blocks")?;
    let part_size = parts[0].len();
    let coeffs = vec![Scalar::one(); part_size];
    let factor_dist = linear_value_distribution(&coeffs, model, caps)?;
    // distribution of L_1 * .. * L_d
    let mut product: BTreeMap<Scalar, Rat> = BTreeMap::new();
    product.insert(Scalar::one(), Rat::one());
    for _ in 0..d {
        let mut next: BTreeMap<Scalar, Rat> = BTreeMap::new();
        for (v, p) in &product {
            for (w, q) in &factor_dist {
                let value = v * w;
                let weight = p * q;
                let slot = next.entry(value).or_insert_with(Rat::zero);
                *slot = &*slot + &weight;
            }
        }
        product = next;
    }
    let mut collision = Rat::zero();
    for p in product.values() {
        collision = &collision + &(p * p);
    }
    Ok(collision)
}

/// `sup_z Pr[(x_1 + .. + x_n)^d = z]` exactly, pushing the linear
/// distribution through `v -> v^d`.
pub fn power_sum_max_probability(
    n: usize,
    d: u32,
    model: &RandomModel,
    caps: &Caps,
) -> Result<(Scalar, Rat)> {
    let coeffs = vec![Scalar::one(); n];
    let linear = linear_value_distribution(&coeffs, model, caps)?;
    let mut dist: BTreeMap<Scalar, Rat> = BTreeMap::new();
    for (v, p) in linear {
        let value = v.pow(d);
        let slot = dist.entry(value).or_insert_with(Rat::zero);
        *slot = &*slot + &p;
    }
    let mut best: Option<(Scalar, Rat)> = None;
    for (z, p) in dist {
        if best.as_ref().map_or(true, |(_, bp)| p > *bp) {
            best = Some((z, p));
        }
    }
    Ok(best.expect("nonempty distribution"))
}

fn quadratic_from_symmetric(a: &Matrix) -> Result<PolynomialSpec> {
    let n = a.n_rows();
    let mut f = PolynomialSpec::new(n);
    for i in 0..n {
        for j in i..n {
            let coef = if i == j {
                a.get(i, i).clone()
            } else {
                a.get(i, j) + a.get(j, i)
            };
            if !coef.is_zero() {
                let exps = if i == j { vec![(i, 2)] } else { vec![(i, 1), (j, 1)] };
                f.add_term(&exps, coef).map_err(anyhow::Error::from)?;
            }
        }
    }
    Ok(f)
}

pub fn run_experiment_scaling(
    kind: ScalingKind,
    n_list: &[usize],
    d: usize,
    model: &RandomModel,
    mode: Mode,
    seed: u64,
    caps: &Caps,
) -> Result<String> {
    let mut rows = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let start = Instant::now();
        let rho = match (kind, mode) {
            (ScalingKind::Counterexample, Mode::Exact) => {
                RhoValue::Exact(counterexample_zero_probability(n, d, model, caps)?)
            }
            (ScalingKind::Counterexample, Mode::Mc { samples }) => {
                let f = make_counterexample(n, d)?;
                let r = monte_carlo_point_probability(
                    &f,
                    &Scalar::zero(),
                    model,
                    samples,
                    seed.wrapping_add(n as u64),
                    ConfidenceLevel::P99,
                )?;
                RhoValue::Estimate { value: r.estimate, ci_low: r.ci_low, ci_high: r.ci_high }
            }
            (ScalingKind::PowerSum, Mode::Exact) => {
                let (_, rho) = power_sum_max_probability(n, d as u32, model, caps)?;
                RhoValue::Exact(rho)
            }
            (ScalingKind::PowerSum, Mode::Mc { samples }) => {
                let (z, _) = power_sum_max_probability(n, d as u32, model, caps)?;
                let f = make_power_sum(n, d as u32)?;
                let r = monte_carlo_point_probability(
                    &f,
                    &z,
                    model,
                    samples,
                    seed.wrapping_add(n as u64),
                    ConfidenceLevel::P99,
                )?;
                RhoValue::Estimate { value: r.estimate, ci_low: r.ci_low, ci_high: r.ci_high }
            }
            (ScalingKind::RandomQuadraticRank(r), mode) => {
                let a = make_random_low_rank(n, r, seed.wrapping_add(n as u64), 0, true)?;
                let f = quadratic_from_symmetric(&a)?;
                match mode {
                    Mode::Exact => {
                        let report = max_point_probability(&f, model, caps)?;
                        RhoValue::Exact(report.probability)
                    }
                    Mode::Mc { samples } => {
                        let rep = monte_carlo_point_probability(
                            &f,
                            &Scalar::zero(),
                            model,
                            samples,
                            seed.wrapping_add(n as u64),
                            ConfidenceLevel::P99,
                        )?;
                        RhoValue::Estimate {
                            value: rep.estimate,
                            ci_low: rep.ci_low,
                            ci_high: rep.ci_high,
                        }
                    }
                }
            }
        };
        rows.push(ScalingRow { n, rho, wall_ms: start.elapsed().as_millis() });
    }
    let mut out = String::new();
    writeln!(
        out,
        "# smallball-csv v1 experiment=scaling kind={} d={d} mode={} seed={seed}",
        kind.name(),
        match mode {
            Mode::Exact => "exact".to_string(),
            Mode::Mc { samples } => format!("mc({samples})"),
        }
    )?;
    writeln!(out, "n,rho,ci_low,ci_high,n_rho,sqrt_n_rho,wall_time_ms")?;
    for row in rows {
        match row.rho {
            RhoValue::Exact(rho) => {
                let n_rho = &rho * &Rat::from_int(row.n as i64);
                let sqrt_n_rho = (row.n as f64).sqrt() * rho.to_f64();
                writeln!(
                    out,
                    "{},{},,,{},{:.9e},{}",
                    row.n, rho, n_rho, sqrt_n_rho, row.wall_ms
                )?;
            }
            RhoValue::Estimate { value, ci_low, ci_high } => {
                writeln!(
                    out,
                    "{},{:.9e},{:.9e},{:.9e},{:.9e},{:.9e},{}",
                    row.n,
                    value,
                    ci_low,
                    ci_high,
                    row.n as f64 * value,
                    (row.n as f64).sqrt() * value,
                    row.wall_ms
                )?;
            }
        }
    }
    Ok(out)
}

/// Accept/reject rates against sample count, on clean rank-1 tensors and on
/// seeded corrupted ones.
#[allow(clippy::too_many_arguments)]
pub fn run_tester_roc(
    dims: &[usize],
    corrupt: usize,
    eps: &Rat,
    samples_list: &[u64],
    trials: u64,
    seed: u64,
) -> Result<String> {
    if dims.len() < 2 {
        bail!("tester ROC needs tensors of dimension >= 2");
    }
    let mut out = String::new();
    writeln!(
        out,
        "# smallball-csv v1 experiment=roc dims={} corrupt={corrupt} eps={eps} trials={trials} seed={seed}",
        dims.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("x")
    )?;
    writeln!(
        out,
        "samples,clean_reject_rate,corrupt_reject_rate,trials,wall_time_ms"
    )?;
    for &samples in samples_list {
        let start = Instant::now();
        let mut clean_rejects = 0u64;
        let mut corrupt_rejects = 0u64;
        for t in 0..trials {
            let tensor_seed = seed.wrapping_add(t);
            let clean = make_random_rank1_tensor(dims, tensor_seed, 0)?;
            let dirty = make_random_rank1_tensor(dims, tensor_seed, corrupt)?;
            let config = TesterConfig::new(samples, seed.wrapping_add(1_000_003 * t), eps.clone());
            if tensor_reducibility_tester(&clean, &config)?.decision == Decision::Reject {
                clean_rejects += 1;
            }
            if tensor_reducibility_tester(&dirty, &config)?.decision == Decision::Reject {
                corrupt_rejects += 1;
            }
        }
        if trials == 0 {
            continue;
        }
        writeln!(
            out,
            "{},{:.6},{:.6},{},{}",
            samples,
            clean_rejects as f64 / trials as f64,
            corrupt_rejects as f64 / trials as f64,
            trials,
            start.elapsed().as_millis()
        )?;
    }
    Ok(out)
}
