//! `sampclust` command line.
//!
//! Exit codes: 0 success, 1 usage errors and infeasible bounds, 2 data and
//! file errors.

use std::ffi::OsString;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use sampclust_core::balanced::{run_balanced_rs_on_sample, BalancedRsConfig};
use sampclust_core::baselines::{kmeans_plus_plus, kmpp_seed, lloyd, LloydConfig};
use sampclust_core::candidates::{CandidateStrategy, DEFAULT_PARTITION_CAP};
use sampclust_core::mcf::build_network;
use sampclust_core::rs::{draw_sample, run_rs_on_sample, RsConfig};
use sampclust_core::{BalanceBounds, CentroidSet, Dataset, RngStream};

use crate::error::{Error, Result};
use crate::experiment::{
    run_effect_of_k, run_effect_of_m, run_effect_of_n, sample_for_benchmark, ExperimentReport, Settings, DESK_ROUNDS,
    EFFECT_K_VALUES, EFFECT_M_VALUES, EFFECT_N_VALUES,
};
use crate::io::load_points;
use crate::lemmas::{run_lemma_suite, LemmaReport, TheoryParams};
use crate::report::emit_report;
use crate::synthetic::{cloud_standin, gen_synthetic, SyntheticSpec};

/// Seed of the generated stand-in for the cloud cover data.
pub const STANDIN_SEED: u64 = 2024;

// Substream of `--seed` that generates `--synthetic` data.
const SYNTHETIC_STREAM: u64 = 1 << 63;

#[derive(Debug, Parser)]
#[command(
    name = "sampclust",
    version,
    about = "Variance-based k-clustering by random sampling"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Cluster one dataset; prints `algorithm,objective,k,n,m,seed`
    Cluster(ClusterArgs),
    /// Win-rate experiments and lemma checks
    Bench {
        #[command(subcommand)]
        which: BenchCommand,
    },
    /// Lemma checks (same as `bench lemmas`)
    Lemmas(LemmaArgs),
    /// Write the balanced-assignment flow network as `origin dest lower upper cost` lines
    DumpNetwork(NetworkArgs),
}

#[derive(Debug, Subcommand)]
pub enum BenchCommand {
    /// Vary the dataset size n (m = n/10, k = 3)
    EffectN(SweepArgs),
    /// Vary the cluster count k (n = 100, m = 50)
    EffectK(SweepArgs),
    /// Vary the sample size m on one dataset (k = 3)
    EffectM(EffectMArgs),
    /// Monte Carlo checks of the sampling lemmas
    Lemmas(LemmaArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Algo {
    Rs,
    Km,
    Kmpp,
    RsBalanced,
}

impl Algo {
    fn name(self) -> &'static str {
        match self {
            Algo::Rs => "rs",
            Algo::Km => "km",
            Algo::Kmpp => "kmpp",
            Algo::RsBalanced => "rs-balanced",
        }
    }
}

#[derive(Debug, Clone, Args)]
#[group(required = true, multiple = false)]
pub struct Source {
    /// Point file: one point per line, whitespace or comma separated, `#` comments
    #[arg(long, value_name = "FILE")]
    pub input: Option<PathBuf>,
    /// Generate n standard normal points in d dimensions from the seed
    #[arg(long, value_name = "n,d", value_parser = parse_synthetic)]
    pub synthetic: Option<SyntheticSpec>,
}

#[derive(Debug, Clone, Args)]
pub struct ClusterArgs {
    #[arg(long, value_enum)]
    pub algo: Algo,
    /// Number of clusters
    #[arg(long)]
    pub k: usize,
    /// Sample size (rs and rs-balanced)
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// exhaustive | ksubset | restarts:R [default: ksubset when C(distinct, k) <= 2000000, else restarts:200]
    #[arg(long, value_parser = parse_candidates)]
    pub candidates: Option<CandidateStrategy>,
    /// Largest partition count `exhaustive` may enumerate
    #[arg(long, default_value_t = DEFAULT_PARTITION_CAP)]
    pub candidate_cap: u128,
    /// Smallest allowed cluster size (rs-balanced)
    #[arg(long)]
    pub lower: Option<usize>,
    /// Largest allowed cluster size (rs-balanced) [default: n]
    #[arg(long)]
    pub upper: Option<usize>,
    #[command(flatten)]
    pub source: Source,
    /// Write `point,cluster` rows to this file
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    /// Worker threads (a single run is sequential; accepted for uniformity)
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Run Lloyd iterations from the RS result
    #[arg(long)]
    pub polish: bool,
    /// Write the flow network for the returned clustering's means and the bounds
    #[arg(long, value_name = "FILE")]
    pub dump_network: Option<PathBuf>,
    /// Lloyd iteration cap (km, kmpp, --polish)
    #[arg(long, default_value_t = 300)]
    pub max_iters: usize,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Rounds per sweep value
    #[arg(long, default_value_t = DESK_ROUNDS)]
    pub rounds: usize,
    /// Output directory for results.csv, summary.csv and chart.svg
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    /// Worker threads [default: available cores]; output does not depend on it
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Dimension of generated instances
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
    /// Comma-separated sweep values instead of the default range
    #[arg(long, value_delimiter = ',')]
    pub values: Option<Vec<usize>>,
    /// Lloyd iteration cap for KM and KM++
    #[arg(long, default_value_t = 300)]
    pub max_iters: usize,
}

#[derive(Debug, Clone, Args)]
pub struct EffectMArgs {
    #[command(flatten)]
    pub sweep: SweepArgs,
    /// Dataset file [default: the generated 1024 x 10 stand-in]
    #[arg(long, value_name = "FILE")]
    pub input: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct LemmaArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write lemmas.csv into this directory
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 0.5)]
    pub delta: f64,
    #[arg(long, default_value_t = 0.5)]
    pub eta: f64,
    /// Use a single repeated point (mu = 1)
    #[arg(long)]
    pub degenerate: bool,
}

#[derive(Debug, Clone, Args)]
pub struct NetworkArgs {
    #[command(flatten)]
    pub source: Source,
    /// Center file; otherwise k-means++ seeds drawn with --seed
    #[arg(long, value_name = "FILE")]
    pub centers: Option<PathBuf>,
    /// Number of seeded centers when --centers is absent
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub lower: usize,
    /// [default: n]
    #[arg(long)]
    pub upper: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output file [default: stdout]
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

fn parse_synthetic(text: &str) -> std::result::Result<SyntheticSpec, String> {
    let (n, d) = text.split_once(',').ok_or("expected n,d")?;
    let n: usize = n.trim().parse().map_err(|_| format!("bad n {n:?}"))?;
    let d: usize = d.trim().parse().map_err(|_| format!("bad d {d:?}"))?;
    if n == 0 || d == 0 {
        return Err("n and d must be positive".into());
    }
    Ok(SyntheticSpec { n, d })
}

fn parse_candidates(text: &str) -> std::result::Result<CandidateStrategy, String> {
    match text {
        "exhaustive" => Ok(CandidateStrategy::ExhaustivePartitions),
        "ksubset" => Ok(CandidateStrategy::ExhaustiveCenterSubsets),
        _ => {
            let r = text
                .strip_prefix("restarts:")
                .ok_or("expected exhaustive, ksubset or restarts:R")?;
            match r.parse() {
                Ok(r) if r >= 1 => Ok(CandidateStrategy::RandomRestarts(r)),
                _ => Err(format!("restart count must be a positive integer, got {r:?}")),
            }
        }
    }
}

/// A failure with its exit code.
#[derive(Debug)]
enum Failure {
    Usage(String),
    Run(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Run(e)
    }
}

impl From<sampclust_core::Error> for Failure {
    fn from(e: sampclust_core::Error) -> Self {
        Failure::Run(e.into())
    }
}

impl Failure {
    fn exit_code(&self) -> i32 {
        use sampclust_core::Error as Core;
        match self {
            Failure::Usage(_) => 1,
            Failure::Run(Error::Core(
                Core::InfeasibleBounds { .. } | Core::InvalidParameter(_) | Core::Capacity { .. },
            )) => 1,
            Failure::Run(_) => 2,
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Usage(m) => m.clone(),
            Failure::Run(Error::Core(sampclust_core::Error::InfeasibleBounds { k, lower, upper, n })) => format!(
                "infeasible bounds: need k·l ≤ n ≤ k·u, got k·l = {k}·{lower} = {}, n = {n}, k·u = {k}·{upper} = {}",
                k * lower,
                k * upper
            ),
            Failure::Run(e) => e.to_string(),
        }
    }
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("error: {}", f.message());
            f.exit_code()
        }
    }
}

fn execute(command: Command) -> std::result::Result<(), Failure> {
    match command {
        Command::Cluster(args) => cluster(&args),
        Command::Bench { which } => match which {
            BenchCommand::EffectN(a) => sweep(&a, |s, v| run_effect_of_n(s, v.unwrap_or(&EFFECT_N_VALUES))),
            BenchCommand::EffectK(a) => sweep(&a, |s, v| run_effect_of_k(s, v.unwrap_or(&EFFECT_K_VALUES))),
            BenchCommand::EffectM(a) => {
                let (data, label) = match &a.input {
                    Some(path) => (load_points(path)?, path.display().to_string()),
                    None => {
                        eprintln!("note: no --input; using the generated 1024 x 10 stand-in (seed {STANDIN_SEED})");
                        (cloud_standin(STANDIN_SEED)?, "stand-in".to_string())
                    }
                };
                if data.len() != 1024 {
                    eprintln!("note: dataset has {} rows (the cloud data has 1024)", data.len());
                }
                sweep(&a.sweep, |s, v| {
                    run_effect_of_m(&data, &label, s, v.unwrap_or(&EFFECT_M_VALUES))
                })
            }
            BenchCommand::Lemmas(a) => lemmas(&a),
        },
        Command::Lemmas(a) => lemmas(&a),
        Command::DumpNetwork(a) => dump_network(&a),
    }
}

fn load_source(source: &Source, seed: u64) -> Result<Dataset> {
    match (&source.input, source.synthetic) {
        (Some(path), _) => load_points(path),
        (None, Some(spec)) => gen_synthetic(spec, &mut RngStream::new(seed).derive(SYNTHETIC_STREAM)),
        (None, None) => unreachable!("clap enforces one source"),
    }
}

fn bounds(lower: Option<usize>, upper: Option<usize>, n: usize) -> std::result::Result<BalanceBounds, Failure> {
    Ok(BalanceBounds::new(lower.unwrap_or(0), upper.unwrap_or(n))?)
}

fn cluster(args: &ClusterArgs) -> std::result::Result<(), Failure> {
    let data = load_source(&args.source, args.seed)?;
    let n = data.len();
    let lloyd_cfg = LloydConfig {
        max_iters: args.max_iters,
        ..LloydConfig::default()
    };
    let needs_m = || {
        args.m
            .ok_or_else(|| Failure::Usage(format!("--algo {} needs --m", args.algo.name())))
    };
    let clustering = match args.algo {
        Algo::Km => lloyd(&data, args.k, &lloyd_cfg, &mut RngStream::new(args.seed))?,
        Algo::Kmpp => kmeans_plus_plus(&data, args.k, &lloyd_cfg, &mut RngStream::new(args.seed))?,
        Algo::Rs | Algo::RsBalanced => {
            let mut cfg = RsConfig::new(
                args.k,
                needs_m()?,
                CandidateStrategy::ExhaustiveCenterSubsets,
                args.seed,
            );
            cfg.partition_cap = args.candidate_cap;
            cfg.polish = args.polish;
            if args.algo == Algo::RsBalanced {
                // Infeasible bounds are reported before any sampling.
                bounds(args.lower, args.upper, n)?.check_feasible(n, args.k)?;
            }
            let sample = match args.candidates {
                Some(strategy) => {
                    cfg.strategy = strategy;
                    draw_sample(&data, &cfg)?
                }
                None => sample_for_benchmark(&data, &mut cfg)?,
            };
            if args.algo == Algo::Rs {
                run_rs_on_sample(&data, sample, &cfg)?.clustering
            } else {
                let cfg = BalancedRsConfig {
                    base: cfg,
                    bounds: bounds(args.lower, args.upper, n)?,
                };
                run_balanced_rs_on_sample(&data, sample, &cfg)?.clustering
            }
        }
    };
    if let Some(path) = &args.dump_network {
        let centers = CentroidSet::from_points(&clustering.centroids().iter().flatten().cloned().collect::<Vec<_>>())?;
        let net = build_network(&data, &centers, bounds(args.lower, args.upper, n)?)?;
        write_file(path, net.to_edge_list().as_bytes())?;
    }
    if let Some(path) = &args.out {
        let mut text = String::from("point,cluster\n");
        for (i, c) in clustering.assignment().iter().enumerate() {
            text.push_str(&format!("{i},{c}\n"));
        }
        write_file(path, text.as_bytes())?;
    }
    let m = match args.algo {
        Algo::Rs | Algo::RsBalanced => args.m.map(|m| m.to_string()).unwrap_or_default(),
        Algo::Km | Algo::Kmpp => String::new(),
    };
    println!(
        "{},{},{},{},{},{}",
        args.algo.name(),
        clustering.objective(),
        args.k,
        n,
        m,
        args.seed
    );
    Ok(())
}

fn sweep<F>(args: &SweepArgs, run: F) -> std::result::Result<(), Failure>
where
    F: FnOnce(&Settings, Option<&[usize]>) -> Result<ExperimentReport>,
{
    if args.rounds == 0 {
        return Err(Failure::Usage("--rounds must be at least 1".into()));
    }
    if args.dim == 0 {
        return Err(Failure::Usage("--dim must be at least 1".into()));
    }
    let settings = Settings {
        seed: args.seed,
        rounds: args.rounds,
        jobs: args.jobs.unwrap_or_else(default_jobs),
        dim: args.dim,
        max_iters: args.max_iters,
        ..Settings::default()
    };
    let report = run(&settings, args.values.as_deref())?;
    let files = emit_report(&report, &args.out)?;
    let summary = fs::read_to_string(&files.summary).map_err(|e| Error::Io {
        path: files.summary.clone(),
        source: e,
    })?;
    print!("{summary}");
    Ok(())
}

fn default_jobs() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn lemmas(args: &LemmaArgs) -> std::result::Result<(), Failure> {
    let params = if args.degenerate {
        TheoryParams {
            delta: args.delta,
            eta: args.eta,
            ..TheoryParams::degenerate()
        }
    } else {
        TheoryParams {
            delta: args.delta,
            eta: args.eta,
            ..TheoryParams::default()
        }
    };
    params.validate().map_err(Failure::Usage)?;
    let report = run_lemma_suite(&params, &RngStream::new(args.seed))?;
    let text = lemma_csv(&report);
    print!("{text}");
    for c in &report.checks {
        eprintln!("{}: {}", c.name, c.detail);
    }
    if let Some(dir) = &args.out {
        fs::create_dir_all(dir).map_err(|e| Error::Io {
            path: dir.clone(),
            source: e,
        })?;
        write_file(&dir.join("lemmas.csv"), text.as_bytes())?;
    }
    Ok(())
}

fn lemma_csv(report: &LemmaReport) -> String {
    let mut text = String::from("check,measured,threshold,passed\n");
    for c in &report.checks {
        text.push_str(&format!(
            "{},{},{},{}\n",
            c.name, c.measured, c.threshold, c.passed as u8
        ));
    }
    text
}

fn dump_network(args: &NetworkArgs) -> std::result::Result<(), Failure> {
    let data = load_source(&args.source, args.seed)?;
    let centers = match (&args.centers, args.k) {
        (Some(path), _) => {
            let points = load_points(path)?;
            CentroidSet::from_flat(points.dim(), points.as_flat().to_vec())?
        }
        (None, Some(k)) => kmpp_seed(&data, k, &mut RngStream::new(args.seed))?,
        (None, None) => return Err(Failure::Usage("dump-network needs --centers or --k".into())),
    };
    let net = build_network(&data, &centers, bounds(Some(args.lower), args.upper, data.len())?)?;
    match &args.out {
        Some(path) => write_file(path, net.to_edge_list().as_bytes())?,
        None => {
            let _ = std::io::stdout().write_all(net.to_edge_list().as_bytes());
        }
    }
    Ok(())
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}
