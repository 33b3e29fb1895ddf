mod experiments;

use std::fs;
use std::io::Read;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use smallball_core::anticonc::{
    exact_distribution, max_point_probability, monte_carlo_point_probability, PolynomialSpec,
    RandomModel,
};
use smallball_core::caps::Caps;
use smallball_core::constructions::{
    make_corner_matrix, make_counterexample, make_power_sum, make_random_low_rank,
    make_random_rank1_tensor,
};
use smallball_core::fractions::{singular_fraction, FractionMode};
use smallball_core::gap::{gap_volume, minimal_cover, CoverQuery, SymmetricGAP};
use smallball_core::matrix::Matrix;
use smallball_core::rat::Rat;
use smallball_core::repair::{symmetric_low_rank_repair, tensor_repair, TensorRepair};
use smallball_core::scalar::Scalar;
use smallball_core::stats::ConfidenceLevel;
use smallball_core::tensor::{AxisPartition, Tensor};
use smallball_core::testers::{
    matrix_rank_tester, tensor_reducibility_tester, Decision, TesterConfig,
};

use experiments::{run_experiment_scaling, run_tester_roc, Mode, ScalingKind};

/// Exact anticoncentration, property testing and repair toolkit.
#[derive(Parser)]
#[command(name = "smallball", version, about)]
struct Cli {
    /// Exact-enumeration cap (submatrix/subtensor scans). Env:
    /// SMALLBALL_ENUM_CAP.
    #[arg(long, global = true)]
    cap: Option<u128>,
    /// Outcome-space cap for exact distributions. Env: SMALLBALL_DIST_CAP.
    #[arg(long, global = true)]
    dist_cap: Option<u128>,
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact rank of a matrix.
    Rank(InputArg),
    /// Exact determinant of a square matrix.
    Det(InputArg),
    /// Fraction of nonsingular r x r submatrices, exact or sampled.
    SingularFraction {
        #[command(flatten)]
        input: InputArg,
        #[arg(long)]
        r: usize,
        #[arg(long, default_value = "exact")]
        mode: String,
        #[arg(long, default_value_t = 10_000)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Tensor operations.
    #[command(subcommand)]
    Tensor(TensorCmd),
    /// Randomized property testers (exit 0 accept, 1 reject, 2 error).
    #[command(subcommand)]
    Test(TestCmd),
    /// Constructive repair (exit 1 when no repair is found).
    #[command(subcommand)]
    Repair(RepairCmd),
    /// Point probabilities of a polynomial of random signs.
    Anticonc {
        #[arg(long)]
        poly: String,
        #[arg(long, default_value = "rademacher")]
        model: String,
        /// Comma-separated per-coordinate shifts for the shifted model.
        #[arg(long)]
        shifts: Option<String>,
        /// Monte Carlo estimation instead of exact enumeration.
        #[arg(long)]
        mc: bool,
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Target value for Monte Carlo mode (default 0); exact mode
        /// reports the full argmax instead.
        #[arg(long)]
        z: Option<String>,
        /// Print the full exact distribution, not just the argmax.
        #[arg(long)]
        distribution: bool,
    },
    /// Symmetric GAP machinery.
    #[command(subcommand)]
    Gap(GapCmd),
    /// Generators for the concrete constructions.
    #[command(subcommand)]
    Gen(GenCmd),
    /// Experiment tables (CSV).
    #[command(subcommand)]
    Experiment(ExperimentCmd),
}

#[derive(Args)]
struct InputArg {
    /// Path to a JSON input ("-" for stdin).
    #[arg(long)]
    input: String,
}

#[derive(Subcommand)]
enum TensorCmd {
    /// First witnessing partition, if the tensor is reducible.
    Reducible(InputArg),
    /// Matrix flattening along a partition like "1|2,3" (1-based axes).
    Flatten {
        #[command(flatten)]
        input: InputArg,
        #[arg(long)]
        partition: String,
    },
    /// Contract with a vector along the last axis.
    Collapse {
        #[command(flatten)]
        input: InputArg,
        /// Comma-separated rationals, e.g. "1,-1,2/3".
        #[arg(long)]
        x: String,
    },
}

#[derive(Subcommand)]
enum TestCmd {
    /// Reducibility tester: samples side-2^(d-1) subtensors.
    Tensor {
        #[command(flatten)]
        input: InputArg,
        #[arg(long)]
        eps: String,
        #[arg(long, default_value_t = 400)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Non-standard probe side (experimentation only).
        #[arg(long)]
        side: Option<usize>,
        /// Direct threshold override (experimentation only).
        #[arg(long)]
        delta: Option<String>,
    },
    /// Rank tester: samples r x r submatrices.
    Matrix {
        #[command(flatten)]
        input: InputArg,
        #[arg(long)]
        r: usize,
        #[arg(long)]
        eps: String,
        #[arg(long, default_value_t = 400)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Subcommand)]
enum RepairCmd {
    /// Symmetric low-rank repair to rank < r.
    SymLowRank {
        #[command(flatten)]
        input: InputArg,
        #[arg(long)]
        r: usize,
    },
    /// Tensor reducibility repair.
    Tensor {
        #[command(flatten)]
        input: InputArg,
        #[arg(long)]
        eps: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Subcommand)]
enum GapCmd {
    /// Minimum-volume bounded cover of a value sequence.
    Cover {
        /// JSON array of ambient vectors.
        #[arg(long)]
        values: String,
        #[arg(long, default_value_t = 2)]
        rank: usize,
        #[arg(long, default_value_t = 0)]
        outliers: usize,
        #[arg(long, default_value_t = 8)]
        bound: u64,
        #[arg(long, default_value_t = 10_000)]
        volume_cap: u128,
    },
    /// Volume of a GAP given as JSON.
    Volume(InputArg),
    /// Membership test.
    Contains {
        #[command(flatten)]
        input: InputArg,
        /// Comma-separated rationals forming the ambient vector.
        #[arg(long)]
        value: String,
    },
}

#[derive(Subcommand)]
enum GenCmd {
    /// Product-difference polynomial on 2d variable blocks.
    Counterexample {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        d: usize,
    },
    /// Corner matrix with triangular chunks of ones.
    Corner {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        ell: usize,
    },
    /// Seeded rank-1 tensor with corruptions.
    Rank1Tensor {
        /// Comma-separated dims, e.g. "6,6,6".
        #[arg(long)]
        dims: String,
        #[arg(long, default_value_t = 0)]
        corrupt: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Seeded low-rank matrix with corruptions.
    LowRank {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        r: usize,
        #[arg(long, default_value_t = 0)]
        corrupt: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        symmetric: bool,
    },
    /// Expanded power sum (x_1 + .. + x_n)^d.
    PowerSum {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        d: u32,
    },
}

#[derive(Subcommand)]
enum ExperimentCmd {
    /// Point-probability scaling table over a list of n.
    Scaling {
        /// counterexample | power-sum | random-quadratic-rank
        #[arg(long)]
        kind: String,
        /// Rank for random-quadratic-rank.
        #[arg(long, default_value_t = 2)]
        rank: usize,
        /// Comma-separated n values, e.g. "8,16,24".
        #[arg(long)]
        n_list: String,
        #[arg(long, default_value_t = 2)]
        d: usize,
        #[arg(long, default_value = "rademacher")]
        model: String,
        /// exact | mc
        #[arg(long, default_value = "exact")]
        mode: String,
        #[arg(long, default_value_t = 1_000_000)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Tester accept/reject rates against sample count.
    Roc {
        #[arg(long, default_value = "6,6,6")]
        dims: String,
        #[arg(long, default_value_t = 2)]
        corrupt: usize,
        #[arg(long, default_value = "1/4")]
        eps: String,
        /// Comma-separated sample counts.
        #[arg(long, default_value = "50,100,200,400")]
        samples_list: String,
        #[arg(long, default_value_t = 50)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}

fn read_input(path: &str) -> Result<String> {
    if path == "-" {
        let mut buf = String::new();
        std::io::stdin().read_to_string(&mut buf)?;
        Ok(buf)
    } else {
        fs::read_to_string(path).with_context(|| format!("reading {path}"))
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &str) -> Result<T> {
    let text = read_input(path)?;
    serde_json::from_str(&text).with_context(|| format!("parsing {path}"))
}

fn parse_rat(s: &str) -> Result<Rat> {
    s.parse::<Rat>().map_err(|e| anyhow!("{e}"))
}

fn parse_scalar_list(s: &str) -> Result<Vec<Scalar>> {
    s.split(',')
        .map(|part| {
            part.trim()
                .parse::<Scalar>()
                .map_err(|e| anyhow!("bad scalar {part:?}: {e}"))
        })
        .collect()
}

fn parse_usize_list(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|part| {
            part.trim()
                .parse::<usize>()
                .with_context(|| format!("bad integer {part:?}"))
        })
        .collect()
}

fn parse_u64_list(s: &str) -> Result<Vec<u64>> {
    s.split(',')
        .map(|part| {
            part.trim()
                .parse::<u64>()
                .with_context(|| format!("bad integer {part:?}"))
        })
        .collect()
}

/// "1|2,3" with 1-based axes -> the side-1 axis list, 0-based.
fn parse_partition(s: &str, d: usize) -> Result<AxisPartition> {
    let (side1, _side2) = s
        .split_once('|')
        .ok_or_else(|| anyhow!("partition must look like \"1|2,3\""))?;
    let axes: Vec<usize> = side1
        .split(',')
        .map(|p| -> Result<usize> {
            let v: usize = p.trim().parse().with_context(|| format!("bad axis {p:?}"))?;
            if v == 0 {
                bail!("axes are 1-based");
            }
            Ok(v - 1)
        })
        .collect::<Result<_>>()?;
    AxisPartition::new(d, &axes).map_err(anyhow::Error::from)
}

fn parse_model(model: &str, shifts: Option<&str>, n: usize) -> Result<RandomModel> {
    match model {
        "rademacher" => Ok(RandomModel::Rademacher),
        "lazy" => Ok(RandomModel::Lazy),
        "shifted" => {
            let shifts =
                shifts.ok_or_else(|| anyhow!("shifted model needs --shifts \"s1,s2,..\""))?;
            let list = parse_scalar_list(shifts)?;
            if list.len() == 1 {
                Ok(RandomModel::Shifted(vec![list[0].clone(); n]))
            } else {
                Ok(RandomModel::Shifted(list))
            }
        }
        other => bail!("unknown model {other:?}"),
    }
}

fn caps_from(cli_cap: Option<u128>, cli_dist: Option<u128>) -> Caps {
    let mut caps = Caps::default();
    let env_cap = |name: &str| {
        std::env::var(name)
            .ok()
            .and_then(|v| v.parse::<u128>().ok())
    };
    if let Some(c) = env_cap("SMALLBALL_ENUM_CAP") {
        caps.enum_cap = c;
    }
    if let Some(c) = env_cap("SMALLBALL_DIST_CAP") {
        caps.dist_cap = c;
    }
    if let Some(c) = env_cap("SMALLBALL_BOX_CAP") {
        caps.box_cap = c;
    }
    if let Some(c) = env_cap("SMALLBALL_SUBSET_CAP") {
        caps.subset_cap = c;
    }
    if let Some(c) = cli_cap {
        caps.enum_cap = c;
    }
    if let Some(c) = cli_dist {
        caps.dist_cap = c;
    }
    caps
}

struct Output {
    target: Option<String>,
}

impl Output {
    fn emit(&self, text: &str) -> Result<()> {
        match &self.target {
            Some(path) => {
                fs::write(path, text).with_context(|| format!("writing {path}"))?;
            }
            None => print!("{text}"),
        }
        Ok(())
    }

    fn emit_json<T: serde::Serialize>(&self, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.emit(&text)
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    let caps = caps_from(cli.cap, cli.dist_cap);
    let out = Output { target: cli.out.clone() };
    match cli.command {
        Command::Rank(input) => {
            let m: Matrix = read_json(&input.input)?;
            out.emit(&format!("{}\n", m.rank()))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Det(input) => {
            let m: Matrix = read_json(&input.input)?;
            let det = m.det()?;
            out.emit(&format!("{det}\n"))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::SingularFraction { input, r, mode, samples, seed } => {
            let m: Matrix = read_json(&input.input)?;
            let mode = match mode.as_str() {
                "exact" => FractionMode::Exact,
                "sampled" => FractionMode::Sampled { samples, seed },
                other => bail!("mode must be exact or sampled, got {other:?}"),
            };
            let stats = singular_fraction(&m, r, mode, &caps)?;
            let report = serde_json::json!({
                "r": stats.r,
                "total": stats.total.to_string(),
                "nonsingular": stats.nonsingular.to_string(),
                "nonsingular_fraction": stats.nonsingular_fraction().to_string(),
                "singular_fraction": stats.singular_fraction().to_string(),
                "mode": match stats.mode {
                    FractionMode::Exact => "exact".to_string(),
                    FractionMode::Sampled { samples, seed } =>
                        format!("sampled(samples={samples}, seed={seed})"),
                },
            });
            out.emit_json(&report)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Tensor(cmd) => run_tensor(cmd, &out),
        Command::Test(cmd) => run_test(cmd, &out),
        Command::Repair(cmd) => run_repair(cmd, &caps, &out),
        Command::Anticonc { poly, model, shifts, mc, samples, seed, z, distribution } => {
            let f: PolynomialSpec = read_json(&poly)?;
            let model = parse_model(&model, shifts.as_deref(), f.n_vars())?;
            if mc {
                let z = match z {
                    Some(s) => s.parse::<Scalar>().map_err(|e| anyhow!("{e}"))?,
                    None => Scalar::zero(),
                };
                let report = monte_carlo_point_probability(
                    &f,
                    &z,
                    &model,
                    samples,
                    seed,
                    ConfidenceLevel::P99,
                )?;
                out.emit_json(&report)?;
            } else if distribution {
                let dist = exact_distribution(&f, &model, &caps)?;
                let table: Vec<serde_json::Value> = dist
                    .iter()
                    .map(|(v, p)| serde_json::json!({"value": v, "probability": p.to_string()}))
                    .collect();
                out.emit_json(&table)?;
            } else {
                let report = max_point_probability(&f, &model, &caps)?;
                out.emit_json(&report)?;
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Gap(cmd) => run_gap(cmd, &caps, &out),
        Command::Gen(cmd) => run_gen(cmd, &out),
        Command::Experiment(cmd) => run_experiment(cmd, &caps, &out),
    }
}

fn run_tensor(cmd: TensorCmd, out: &Output) -> Result<ExitCode> {
    match cmd {
        TensorCmd::Reducible(input) => {
            let t: Tensor = read_json(&input.input)?;
            match t.is_reducible()? {
                Some(p) => {
                    out.emit(&format!("reducible {p}\n"))?;
                    Ok(ExitCode::SUCCESS)
                }
                None => {
                    out.emit("irreducible\n")?;
                    Ok(ExitCode::from(1))
                }
            }
        }
        TensorCmd::Flatten { input, partition } => {
            let t: Tensor = read_json(&input.input)?;
            let p = parse_partition(&partition, t.d())?;
            out.emit_json(&t.flatten(&p)?)?;
            Ok(ExitCode::SUCCESS)
        }
        TensorCmd::Collapse { input, x } => {
            let t: Tensor = read_json(&input.input)?;
            let vec = parse_scalar_list(&x)?;
            out.emit_json(&t.collapse(&vec)?)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn run_test(cmd: TestCmd, out: &Output) -> Result<ExitCode> {
    let verdict = match cmd {
        TestCmd::Tensor { input, eps, samples, seed, side, delta } => {
            let t: Tensor = read_json(&input.input)?;
            let mut config = TesterConfig::new(samples, seed, parse_rat(&eps)?);
            config.side = side;
            if side.is_some() {
                eprintln!(
                    "note: non-default probe side; the derived threshold no longer matches the lemma scale"
                );
            }
            config.delta_override = delta.as_deref().map(parse_rat).transpose()?;
            tensor_reducibility_tester(&t, &config)?
        }
        TestCmd::Matrix { input, r, eps, samples, seed } => {
            let m: Matrix = read_json(&input.input)?;
            let config = TesterConfig::new(samples, seed, parse_rat(&eps)?);
            matrix_rank_tester(&m, r, &config)?
        }
    };
    out.emit_json(&verdict)?;
    Ok(match verdict.decision {
        Decision::Accept => ExitCode::SUCCESS,
        Decision::Reject => ExitCode::from(1),
    })
}

fn run_repair(cmd: RepairCmd, caps: &Caps, out: &Output) -> Result<ExitCode> {
    match cmd {
        RepairCmd::SymLowRank { input, r } => {
            let m: Matrix = read_json(&input.input)?;
            let outcome = symmetric_low_rank_repair(&m, r, caps)?;
            out.emit_json(&outcome)?;
            Ok(ExitCode::SUCCESS)
        }
        RepairCmd::Tensor { input, eps, seed } => {
            let t: Tensor = read_json(&input.input)?;
            let eps = parse_rat(&eps)?;
            match tensor_repair(&t, &eps, seed, caps)? {
                TensorRepair::Repaired(outcome) => {
                    out.emit_json(&outcome)?;
                    Ok(ExitCode::SUCCESS)
                }
                failed @ TensorRepair::Failed { .. } => {
                    out.emit_json(&failed)?;
                    Ok(ExitCode::from(1))
                }
            }
        }
    }
}

fn run_gap(cmd: GapCmd, caps: &Caps, out: &Output) -> Result<ExitCode> {
    match cmd {
        GapCmd::Cover { values, rank, outliers, bound, volume_cap } => {
            let values: Vec<Vec<Scalar>> = read_json(&values)?;
            let query = CoverQuery {
                values,
                max_rank: rank,
                outliers_allowed: outliers,
                generator_bound: bound,
                volume_cap,
            };
            match minimal_cover(&query, caps)? {
                Some(cover) => {
                    out.emit_json(&cover)?;
                    Ok(ExitCode::SUCCESS)
                }
                None => {
                    out.emit("no cover within the search box\n")?;
                    Ok(ExitCode::from(1))
                }
            }
        }
        GapCmd::Volume(input) => {
            let g: SymmetricGAP = read_json(&input.input)?;
            out.emit(&format!("{}\n", gap_volume(&g)?))?;
            Ok(ExitCode::SUCCESS)
        }
        GapCmd::Contains { input, value } => {
            let g: SymmetricGAP = read_json(&input.input)?;
            let u = parse_scalar_list(&value)?;
            let contains = smallball_core::gap::gap_contains(&g, &u, caps)?;
            out.emit(&format!("{contains}\n"))?;
            Ok(if contains {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
    }
}

fn run_gen(cmd: GenCmd, out: &Output) -> Result<ExitCode> {
    match cmd {
        GenCmd::Counterexample { n, d } => {
            out.emit_json(&make_counterexample(n, d)?)?;
        }
        GenCmd::Corner { n, ell } => {
            out.emit_json(&make_corner_matrix(n, ell)?)?;
        }
        GenCmd::Rank1Tensor { dims, corrupt, seed } => {
            let dims = parse_usize_list(&dims)?;
            out.emit_json(&make_random_rank1_tensor(&dims, seed, corrupt)?)?;
        }
        GenCmd::LowRank { n, r, corrupt, seed, symmetric } => {
            out.emit_json(&make_random_low_rank(n, r, seed, corrupt, symmetric)?)?;
        }
        GenCmd::PowerSum { n, d } => {
            out.emit_json(&make_power_sum(n, d)?)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn run_experiment(cmd: ExperimentCmd, caps: &Caps, out: &Output) -> Result<ExitCode> {
    match cmd {
        ExperimentCmd::Scaling { kind, rank, n_list, d, model, mode, samples, seed } => {
            let kind = match kind.as_str() {
                "counterexample" => ScalingKind::Counterexample,
                "power-sum" => ScalingKind::PowerSum,
                "random-quadratic-rank" => ScalingKind::RandomQuadraticRank(rank),
                other => bail!("unknown experiment kind {other:?}"),
            };
            let n_list = parse_usize_list(&n_list)?;
            let model = parse_model(&model, None, 0)?;
            let mode = match mode.as_str() {
                "exact" => Mode::Exact,
                "mc" => Mode::Mc { samples },
                other => bail!("mode must be exact or mc, got {other:?}"),
            };
            let csv = run_experiment_scaling(kind, &n_list, d, &model, mode, seed, caps)?;
            out.emit(&csv)?;
            Ok(ExitCode::SUCCESS)
        }
        ExperimentCmd::Roc { dims, corrupt, eps, samples_list, trials, seed } => {
            let dims = parse_usize_list(&dims)?;
            let eps = parse_rat(&eps)?;
            let samples_list = parse_u64_list(&samples_list)?;
            let csv = run_tester_roc(&dims, corrupt, &eps, &samples_list, trials, seed)?;
            out.emit(&csv)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}
