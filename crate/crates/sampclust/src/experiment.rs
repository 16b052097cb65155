//! The three win-rate protocols: vary the dataset size `n`, the cluster
//! count `k`, or the sample size `m`, run RS, KM and KM++ on every round's
//! instance, and mark every algorithm that reaches the round's minimum.

use std::borrow::Cow;

use rayon::prelude::*;
use sampclust_core::baselines::{kmeans_plus_plus, lloyd, LloydConfig};
use sampclust_core::candidates::{distinct_points, CandidateStrategy, BENCH_RESTARTS, BENCH_SUBSET_LIMIT};
use sampclust_core::rs::{draw_sample, run_rs_on_sample, RsConfig};
use sampclust_core::{approx_eq, Dataset, RngStream, SampleSet};

use crate::error::Result;
use crate::synthetic::{gen_synthetic, SyntheticSpec};

pub const EFFECT_N_VALUES: [usize; 10] = [100, 200, 300, 400, 500, 600, 700, 800, 900, 1000];
pub const EFFECT_K_VALUES: [usize; 7] = [2, 3, 4, 5, 6, 7, 8];
pub const EFFECT_M_VALUES: [usize; 8] = [25, 50, 75, 100, 125, 150, 175, 200];
pub const DESK_ROUNDS: usize = 30;

// Per-round substreams.
const DATA_STREAM: u64 = 0;
const RS_STREAM: u64 = 1;
const KM_STREAM: u64 = 2;
const KMPP_STREAM: u64 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    Rs,
    Km,
    Kmpp,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::Rs, Algorithm::Km, Algorithm::Kmpp];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Rs => "RS",
            Algorithm::Km => "KM",
            Algorithm::Kmpp => "KM++",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|a| a.name() == name)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub seed: u64,
    pub rounds: usize,
    /// Worker threads; results do not depend on it.
    pub jobs: usize,
    /// Dimension of generated instances.
    pub dim: usize,
    pub max_iters: usize,
    pub algorithms: Vec<Algorithm>,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            seed: 0,
            rounds: DESK_ROUNDS,
            jobs: 1,
            dim: 2,
            max_iters: LloydConfig::default().max_iters,
            algorithms: Algorithm::ALL.to_vec(),
        }
    }
}

/// One round at one sweep value; `objectives` follows the report's algorithm order.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundOutcome {
    pub sweep_value: usize,
    pub round: usize,
    pub objectives: Vec<f64>,
}

impl RoundOutcome {
    /// The argmin set within the relative tolerance; never empty.
    pub fn hits(&self) -> Vec<bool> {
        let best = self.objectives.iter().copied().fold(f64::INFINITY, f64::min);
        self.objectives.iter().map(|&v| approx_eq(v, best)).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub parameter: String,
    pub values: Vec<usize>,
    pub rounds: usize,
    pub seed: u64,
    pub algorithms: Vec<Algorithm>,
    /// Free-form `(key, value)` description of the protocol, for humans.
    pub settings: Vec<(String, String)>,
    /// Ordered by sweep value, then round.
    pub outcomes: Vec<RoundOutcome>,
}

impl ExperimentReport {
    /// Hits per algorithm at `value`.
    pub fn hit_counts(&self, value: usize) -> Vec<usize> {
        let mut counts = vec![0; self.algorithms.len()];
        for o in self.outcomes.iter().filter(|o| o.sweep_value == value) {
            for (c, hit) in counts.iter_mut().zip(o.hits()) {
                *c += hit as usize;
            }
        }
        counts
    }

    pub fn hits(&self, value: usize, algorithm: Algorithm) -> usize {
        self.algorithms
            .iter()
            .position(|&a| a == algorithm)
            .map_or(0, |i| self.hit_counts(value)[i])
    }
}

struct Instance<'a> {
    data: Cow<'a, Dataset>,
    k: usize,
    m: usize,
}

/// Varying n: fresh standard normal instances of size `n`, `m = n/10`, `k = 3`.
pub fn run_effect_of_n(settings: &Settings, values: &[usize]) -> Result<ExperimentReport> {
    let dim = settings.dim;
    let echo = vec![
        ("instances".into(), format!("standard normal, d={dim}, fresh per round")),
        ("k".into(), "3".into()),
        ("m".into(), "n/10".into()),
    ];
    run_sweep("n", values, settings, echo, |n, rng| {
        Ok(Instance {
            data: Cow::Owned(gen_synthetic(SyntheticSpec { n, d: dim }, rng)?),
            k: 3,
            m: n / 10,
        })
    })
}

/// Varying k: fresh standard normal instances with `n = 100`, `m = 50`.
pub fn run_effect_of_k(settings: &Settings, values: &[usize]) -> Result<ExperimentReport> {
    let dim = settings.dim;
    let echo = vec![
        ("instances".into(), format!("standard normal, d={dim}, fresh per round")),
        ("n".into(), "100".into()),
        ("m".into(), "50".into()),
    ];
    run_sweep("k", values, settings, echo, |k, rng| {
        Ok(Instance {
            data: Cow::Owned(gen_synthetic(SyntheticSpec { n: 100, d: dim }, rng)?),
            k,
            m: 50,
        })
    })
}

/// Varying m: one fixed dataset, `k = 3`, varying sample size.
pub fn run_effect_of_m(data: &Dataset, label: &str, settings: &Settings, values: &[usize]) -> Result<ExperimentReport> {
    let echo = vec![
        ("dataset".into(), format!("{label} ({} x {})", data.len(), data.dim())),
        ("k".into(), "3".into()),
    ];
    run_sweep("m", values, settings, echo, |m, _| {
        Ok(Instance {
            data: Cow::Borrowed(data),
            k: 3,
            m,
        })
    })
}

fn run_sweep<'a, F>(
    parameter: &str,
    values: &[usize],
    settings: &Settings,
    mut echo: Vec<(String, String)>,
    instance: F,
) -> Result<ExperimentReport>
where
    F: Fn(usize, &mut RngStream) -> Result<Instance<'a>> + Sync,
{
    echo.extend([
        ("seed".into(), settings.seed.to_string()),
        ("rounds".into(), settings.rounds.to_string()),
        (
            "rs candidates".into(),
            format!("ksubset when C(distinct, k) <= {BENCH_SUBSET_LIMIT}, else restarts:{BENCH_RESTARTS}"),
        ),
        ("lloyd max iters".into(), settings.max_iters.to_string()),
    ]);
    let base = RngStream::new(settings.seed);
    let jobs: Vec<(usize, usize, usize)> = values
        .iter()
        .enumerate()
        .flat_map(|(i, &v)| (0..settings.rounds).map(move |r| (i, v, r)))
        .collect();
    let run = |&(i, value, round): &(usize, usize, usize)| -> Result<RoundOutcome> {
        let stream = base.derive(i as u64).derive(round as u64);
        let inst = instance(value, &mut stream.derive(DATA_STREAM))?;
        let objectives = settings
            .algorithms
            .iter()
            .map(|&a| run_algorithm(a, &inst, settings.max_iters, &stream))
            .collect::<Result<_>>()?;
        Ok(RoundOutcome {
            sweep_value: value,
            round,
            objectives,
        })
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(settings.jobs.max(1))
        .build()
        .expect("thread pool");
    // Indexed parallel collect keeps the job order.
    let outcomes = pool.install(|| jobs.par_iter().map(run).collect::<Result<Vec<_>>>())?;
    Ok(ExperimentReport {
        parameter: parameter.into(),
        values: values.to_vec(),
        rounds: settings.rounds,
        seed: settings.seed,
        algorithms: settings.algorithms.clone(),
        settings: echo,
        outcomes,
    })
}

fn run_algorithm(algorithm: Algorithm, inst: &Instance, max_iters: usize, stream: &RngStream) -> Result<f64> {
    let data = inst.data.as_ref();
    let lloyd_cfg = LloydConfig {
        max_iters,
        ..LloydConfig::default()
    };
    let clustering = match algorithm {
        Algorithm::Rs => {
            let mut cfg = RsConfig::new(inst.k, inst.m, CandidateStrategy::ExhaustiveCenterSubsets, 0);
            cfg.seed = stream.derive(RS_STREAM).seed();
            let sample = sample_for_benchmark(data, &mut cfg)?;
            run_rs_on_sample(data, sample, &cfg)?.clustering
        }
        Algorithm::Km => lloyd(data, inst.k, &lloyd_cfg, &mut stream.derive(KM_STREAM))?,
        Algorithm::Kmpp => kmeans_plus_plus(data, inst.k, &lloyd_cfg, &mut stream.derive(KMPP_STREAM))?,
    };
    Ok(clustering.objective())
}

/// Draws the sample `run_rs` would draw for `cfg` and sets the benchmark
/// strategy, which depends on the number of distinct sample points.
pub fn sample_for_benchmark(data: &Dataset, cfg: &mut RsConfig) -> Result<SampleSet> {
    let sample = draw_sample(data, cfg)?;
    cfg.strategy = CandidateStrategy::benchmark_default(distinct_points(&sample).len(), cfg.k);
    Ok(sample)
}
