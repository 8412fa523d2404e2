use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use adabf::bench::{run_sweep, tune_method, write_sweep_csv, SweepOptions};
use adabf::score::write_scored_csv;
use adabf::tuning::{build_filter, HyperParams, Method, Tuner};
use adabf::{
    allocate_disjoint, fpr_upper_bound, gen_synthetic, load_scored_csv, min_sample_size,
    sample_size_bound, sandwich_allocate, BetaShape, Filter, ScoredDataset, MU,
};
use anyhow::{bail, ensure, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use serde_json::json;

#[derive(Parser)]
#[command(
    name = "adabf",
    version,
    about = "Adaptive learned Bloom filters: build, query, tune and benchmark"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic scored dataset with Beta-distributed scores.
    Gen(GenArgs),
    /// Build a filter and serialize it.
    Build(BuildArgs),
    /// Query a serialized filter; exits 0 when positive, 1 when negative.
    Query(QueryArgs),
    /// Sweep methods, budgets and seeds and write a results CSV.
    Bench(BenchArgs),
    /// Grid-search one method and write a JSON report.
    Tune(TuneArgs),
    /// Evaluate an analytical formula.
    Bound(BoundArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    keys: usize,
    #[arg(long)]
    nonkeys: usize,
    #[arg(long, value_delimiter = ',', default_value = "3,1")]
    key_beta: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "1,3")]
    nonkey_beta: Vec<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Standard,
    Lbf,
    Sandwich,
    Ada,
    Disjoint,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Standard => Method::Standard,
            MethodArg::Lbf => Method::Lbf,
            MethodArg::Sandwich => Method::Sandwich,
            MethodArg::Ada => Method::Ada,
            MethodArg::Disjoint => Method::Disjoint,
        }
    }
}

/// Grid overrides shared by `tune` and `bench`.
#[derive(Args, Default)]
struct GridArgs {
    #[arg(long, value_delimiter = ',')]
    tau_grid: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    kmax_grid: Option<Vec<u32>>,
    #[arg(long, value_delimiter = ',')]
    c_grid: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    g_grid: Option<Vec<usize>>,
}

#[derive(Args)]
struct BuildArgs {
    #[arg(long, value_enum)]
    method: MethodArg,
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    bitmap_bits: u64,
    #[arg(long, default_value_t = 0)]
    model_bits: u64,
    /// Hash count (standard).
    #[arg(long)]
    k: Option<u32>,
    /// Score threshold (lbf, sandwich).
    #[arg(long)]
    tau: Option<f64>,
    /// Largest hash count (ada).
    #[arg(long)]
    k_max: Option<u32>,
    #[arg(long, default_value_t = 0)]
    k_min: u32,
    /// Group count (disjoint).
    #[arg(long)]
    g: Option<usize>,
    /// Non-key ratio between adjacent groups (ada, disjoint).
    #[arg(long)]
    c: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct QueryArgs {
    #[arg(long)]
    filter: PathBuf,
    #[arg(long)]
    id: String,
    /// Model score of the item; ignored by the standard filter.
    #[arg(long)]
    score: Option<f64>,
}

#[derive(Args)]
struct BenchArgs {
    /// TOML file with any of the options below; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    data: Option<PathBuf>,
    /// Bitmap sizes of the learned methods, in bits.
    #[arg(long, value_delimiter = ',')]
    budgets: Option<Vec<u64>>,
    #[arg(long, value_delimiter = ',', value_enum)]
    methods: Option<Vec<MethodArg>>,
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    #[arg(long)]
    model_bits: Option<u64>,
    /// Record build time and median query latency (makes output non-reproducible).
    #[arg(long)]
    timing: bool,
    /// Tune on the remaining non-keys after holding out this fraction.
    #[arg(long)]
    holdout: Option<f64>,
    #[command(flatten)]
    grids: GridArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct BenchConfig {
    data: Option<PathBuf>,
    budgets: Option<Vec<u64>>,
    methods: Option<Vec<String>>,
    seeds: Option<Vec<u64>>,
    model_bits: Option<u64>,
    timing: Option<bool>,
    holdout: Option<f64>,
    tau_grid: Option<Vec<f64>>,
    kmax_grid: Option<Vec<u32>>,
    c_grid: Option<Vec<f64>>,
    g_grid: Option<Vec<usize>>,
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TuneArgs {
    #[arg(long, value_enum)]
    method: MethodArg,
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    bitmap_bits: u64,
    #[arg(long, default_value_t = 0)]
    model_bits: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    holdout: Option<f64>,
    #[command(flatten)]
    grids: GridArgs,
    #[arg(long)]
    report: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum BoundOp {
    FprBound,
    SampleSize,
    SandwichAlloc,
    DisjointAlloc,
}

#[derive(Args)]
struct BoundArgs {
    #[arg(long, value_enum)]
    op: BoundOp,
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    g: Option<u32>,
    #[arg(long)]
    k_max: Option<u32>,
    /// Number of groups (sample-size).
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    fp: Option<f64>,
    #[arg(long = "fn")]
    fn_: Option<f64>,
    /// Bits per key (sandwich-alloc).
    #[arg(long)]
    budget: Option<f64>,
    #[arg(long)]
    bitmap_bits: Option<u64>,
    /// Keys per group (disjoint-alloc).
    #[arg(long, value_delimiter = ',')]
    n: Option<Vec<u64>>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(a) => gen(a),
        Command::Build(a) => build(a),
        Command::Query(a) => return query(a),
        Command::Bench(a) => bench(a),
        Command::Tune(a) => tune(a),
        Command::Bound(a) => bound(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn beta(values: &[f64], flag: &str) -> Result<BetaShape> {
    ensure!(values.len() == 2, "--{flag} takes two values `a,b`");
    Ok(BetaShape {
        a: values[0],
        b: values[1],
    })
}

fn load(path: &Path) -> Result<ScoredDataset> {
    load_scored_csv(path).with_context(|| format!("loading {}", path.display()))
}

fn gen(a: GenArgs) -> Result<()> {
    let ds = gen_synthetic(
        a.keys,
        a.nonkeys,
        beta(&a.key_beta, "key-beta")?,
        beta(&a.nonkey_beta, "nonkey-beta")?,
        a.seed,
    )?;
    let file = fs::File::create(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    write_scored_csv(&ds, io::BufWriter::new(file))?;
    Ok(())
}

fn build(a: BuildArgs) -> Result<()> {
    let ds = load(&a.data)?;
    let method = Method::from(a.method);
    let given = match method {
        Method::Standard => a.k.map(|k| HyperParams::Standard { k }),
        Method::Lbf => a.tau.map(|tau| HyperParams::Lbf { tau }),
        Method::Sandwich => a.tau.map(HyperParams::sandwich),
        Method::Ada => match (a.k_max, a.c) {
            (Some(k_max), Some(c)) => {
                ensure!(k_max >= a.k_min, "--k-max must be at least --k-min");
                Some(HyperParams::Ada {
                    k_max,
                    k_min: a.k_min,
                    g: (k_max - a.k_min) as usize + 1,
                    c,
                })
            }
            (None, None) => None,
            _ => bail!("ada needs both --k-max and --c, or neither to tune them"),
        },
        Method::Disjoint => match (a.g, a.c) {
            (Some(g), Some(c)) => Some(HyperParams::Disjoint { g, c }),
            (None, None) => None,
            _ => bail!("disjoint needs both --g and --c, or neither to tune them"),
        },
    };
    let params = match given {
        Some(p) => p,
        None => {
            log::info!("no {method} parameters given; tuning over the default grids");
            let tuner = Tuner::new(&ds, a.seed);
            tune_method(&tuner, method, a.bitmap_bits, &SweepOptions::default())?.params
        }
    };
    let filter = with_model_bits(
        build_filter(&ds, a.bitmap_bits, &params, a.seed)?,
        a.model_bits,
    );
    fs::write(&a.out, filter.to_bytes()).with_context(|| format!("writing {}", a.out.display()))?;
    println!(
        "{}",
        serde_json::to_string(&json!({
            "params": params,
            "bitmap_bits": filter.bitmap_bits(),
            "model_bits": filter.model_bits(),
        }))?
    );
    Ok(())
}

fn with_model_bits(filter: Filter, bits: u64) -> Filter {
    match filter {
        Filter::Learned(f) => f.with_model_bits(bits).into(),
        Filter::Sandwiched(f) => f.with_model_bits(bits).into(),
        Filter::Ada(f) => f.with_model_bits(bits).into(),
        Filter::Disjoint(f) => f.with_model_bits(bits).into(),
        f @ Filter::Standard(_) => f,
    }
}

fn query(a: QueryArgs) -> ExitCode {
    let run = || -> Result<bool> {
        let bytes =
            fs::read(&a.filter).with_context(|| format!("reading {}", a.filter.display()))?;
        let filter = Filter::from_bytes(&bytes)?;
        let score = match (a.score, &filter) {
            (Some(s), _) => {
                ensure!((0.0..=1.0).contains(&s), "--score must lie in [0, 1]");
                s
            }
            (None, Filter::Standard(_)) => 0.0,
            (None, _) => bail!("this filter is learned; pass --score"),
        };
        Ok(filter.contains(a.id.as_bytes(), score))
    };
    match run() {
        Ok(true) => {
            println!("positive");
            ExitCode::SUCCESS
        }
        Ok(false) => {
            println!("negative");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn bench(a: BenchArgs) -> Result<()> {
    let cfg: BenchConfig = match &a.config {
        Some(path) => {
            let text =
                fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
        }
        None => BenchConfig::default(),
    };
    let data = a.data.or(cfg.data).context("--data is required")?;
    let budgets = a.budgets.or(cfg.budgets).context("--budgets is required")?;
    let methods: Vec<Method> = match (a.methods, cfg.methods) {
        (Some(m), _) => m.into_iter().map(Method::from).collect(),
        (None, Some(names)) => names
            .iter()
            .map(|s| s.parse())
            .collect::<adabf::Result<_>>()?,
        (None, None) => Method::ALL.to_vec(),
    };
    let seeds = a.seeds.or(cfg.seeds).unwrap_or_else(|| vec![0]);
    let options = SweepOptions {
        model_bits: a.model_bits.or(cfg.model_bits).unwrap_or(0),
        timing: a.timing || cfg.timing.unwrap_or(false),
        holdout: a.holdout.or(cfg.holdout),
        tau_grid: a.grids.tau_grid.or(cfg.tau_grid),
        kmax_grid: a.grids.kmax_grid.or(cfg.kmax_grid),
        c_grid: a.grids.c_grid.or(cfg.c_grid),
        g_grid: a.grids.g_grid.or(cfg.g_grid),
    };
    let ds = load(&data)?;
    let rows = run_sweep(&ds, &budgets, &methods, &seeds, &options)?;
    match a.out.or(cfg.out) {
        Some(path) => {
            let file =
                fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?;
            write_sweep_csv(&rows, io::BufWriter::new(file))?;
        }
        None => write_sweep_csv(&rows, io::stdout().lock())?,
    }
    Ok(())
}

fn tune(a: TuneArgs) -> Result<()> {
    let ds = load(&a.data)?;
    let tuner = match a.holdout {
        Some(f) => Tuner::with_holdout(&ds, f, a.seed)?,
        None => Tuner::new(&ds, a.seed),
    }
    .with_model_bits(a.model_bits);
    let options = SweepOptions {
        tau_grid: a.grids.tau_grid,
        kmax_grid: a.grids.kmax_grid,
        c_grid: a.grids.c_grid,
        g_grid: a.grids.g_grid,
        ..SweepOptions::default()
    };
    let result = tune_method(&tuner, a.method.into(), a.bitmap_bits, &options)?;
    let file =
        fs::File::create(&a.report).with_context(|| format!("creating {}", a.report.display()))?;
    let mut w = io::BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, &result)?;
    writeln!(w)?;
    println!(
        "{}",
        serde_json::to_string(&json!({ "params": result.params, "fpr": result.fpr }))?
    );
    Ok(())
}

fn need<T>(v: Option<T>, flag: &str, op: &str) -> Result<T> {
    v.with_context(|| format!("--op {op} needs --{flag}"))
}

fn bound(a: BoundArgs) -> Result<()> {
    let out = match a.op {
        BoundOp::FprBound => {
            let c = need(a.c, "c", "fpr-bound")?;
            let alpha = need(a.alpha, "alpha", "fpr-bound")?;
            let g = need(a.g, "g", "fpr-bound")?;
            let k_max = need(a.k_max, "k-max", "fpr-bound")?;
            ensure!(
                c > 0.0 && (0.0..=1.0).contains(&alpha),
                "need c > 0 and alpha in [0, 1]"
            );
            ensure!(g >= 1 && k_max + 1 >= g, "need g >= 1 and k_max >= g - 1");
            json!({ "op": "fpr-bound", "c": c, "alpha": alpha, "g": g, "k_max": k_max,
                    "fpr_bound": fpr_upper_bound(c, alpha, g, k_max) })
        }
        BoundOp::SampleSize => {
            let k = need(a.k, "k", "sample-size")?;
            let eps = need(a.epsilon, "epsilon", "sample-size")?;
            let delta = need(a.delta, "delta", "sample-size")?;
            json!({ "op": "sample-size", "k": k, "epsilon": eps, "delta": delta,
                    "bound": sample_size_bound(k, eps, delta)?, "min_sample": min_sample_size(k, eps, delta)? })
        }
        BoundOp::SandwichAlloc => {
            let fp = need(a.fp, "fp", "sandwich-alloc")?;
            let fn_ = need(a.fn_, "fn", "sandwich-alloc")?;
            let budget = need(a.budget, "budget", "sandwich-alloc")?;
            let alloc = sandwich_allocate(fp, fn_, budget)?;
            json!({ "op": "sandwich-alloc", "f_p": fp, "f_n": fn_, "budget": budget, "allocation": alloc })
        }
        BoundOp::DisjointAlloc => {
            let bits = need(a.bitmap_bits, "bitmap-bits", "disjoint-alloc")?;
            let n = need(a.n, "n", "disjoint-alloc")?;
            let c = need(a.c, "c", "disjoint-alloc")?;
            let g = match a.g {
                Some(g) => g as usize,
                None => n.len(),
            };
            let r = allocate_disjoint(bits, &n, c, g)?;
            json!({ "op": "disjoint-alloc", "bitmap_bits": bits, "n": n, "c": c, "g": g, "mu": MU,
                    "eta": c.ln() / MU.ln(), "r": r })
        }
    };
    println!("{}", serde_json::to_string(&out)?);
    Ok(())
}
