//! The random-sampling clustering engine.
//!
//! Draw `m` points uniformly with replacement, turn every candidate
//! k-clustering of the sample into the centroid set of its groups, partition
//! the full dataset by those centroids, score the partition about its own
//! means, and keep the best.

use alloc::boxed::Box;
use alloc::format;
use alloc::vec::Vec;

use crate::baselines::{lloyd, LloydConfig, LloydInit};
use crate::candidates::{
    enumerate_center_subsets, enumerate_partitions, random_restart_candidates, Candidate, CandidateStrategy,
    DEFAULT_PARTITION_CAP,
};
use crate::geometry::{nearest_center, CentroidSet, Clustering, Dataset, PartitionScratch};
use crate::rng::{sample_with_replacement, splitmix64, RngStream, SampleSet};
use crate::{strictly_less, Error, Result};

/// Upper limit on the sample size `m`.
pub const MAX_SAMPLE_SIZE: usize = 1 << 20;

// Substream labels under the run seed.
const SAMPLE_STREAM: u64 = 0;
const RESTART_STREAM: u64 = 1;
const POLISH_STREAM: u64 = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct RsConfig {
    pub k: usize,
    pub m: usize,
    pub strategy: CandidateStrategy,
    pub seed: u64,
    /// Cap on `S(m, k)` for [`CandidateStrategy::ExhaustivePartitions`].
    pub partition_cap: u128,
    /// Run Lloyd iterations from the returned clustering's means.
    pub polish: bool,
}

impl RsConfig {
    pub fn new(k: usize, m: usize, strategy: CandidateStrategy, seed: u64) -> Self {
        Self {
            k,
            m,
            strategy,
            seed,
            partition_cap: DEFAULT_PARTITION_CAP,
            polish: false,
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidParameter("k must be at least 1".into()));
        }
        if n < self.k {
            return Err(Error::InvalidParameter(format!("need n >= k, got n={n}, k={}", self.k)));
        }
        if self.m < self.k {
            return Err(Error::InvalidParameter(format!(
                "need m >= k, got m={}, k={}",
                self.m, self.k
            )));
        }
        if self.m > MAX_SAMPLE_SIZE {
            return Err(Error::InvalidParameter(format!(
                "sample size {} above the limit {MAX_SAMPLE_SIZE}",
                self.m
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RsResult {
    pub clustering: Clustering,
    pub best_candidate_index: usize,
    pub candidates_evaluated: usize,
    pub sample: SampleSet,
}

/// Samples `cfg.m` points with the seed's sample stream, then searches.
pub fn run_rs(data: &Dataset, cfg: &RsConfig) -> Result<RsResult> {
    let sample = draw_sample(data, cfg)?;
    run_rs_on_sample(data, sample, cfg)
}

/// The sample [`run_rs`] would draw for `cfg`.
pub fn draw_sample(data: &Dataset, cfg: &RsConfig) -> Result<SampleSet> {
    cfg.validate(data.len())?;
    sample_with_replacement(data, cfg.m, &mut RngStream::new(cfg.seed).derive(SAMPLE_STREAM))
}

/// Same as [`run_rs`] with a given sample; `cfg.m` is ignored.
pub fn run_rs_on_sample(data: &Dataset, sample: SampleSet, cfg: &RsConfig) -> Result<RsResult> {
    let screen = Screener::new(data, cfg.k);
    let mut result = search_with::<fn(&CentroidSet, &mut Vec<usize>) -> Result<()>>(
        data,
        sample,
        cfg,
        Assigner::Voronoi(Box::new(screen)),
    )?;
    if cfg.polish && result.clustering.nonempty_count() == cfg.k {
        let init = LloydInit::Provided(result.clustering.centroid_set());
        let base = RngStream::new(cfg.seed);
        result.clustering = lloyd(
            data,
            cfg.k,
            &LloydConfig::with_init(init),
            &mut base.derive(POLISH_STREAM),
        )?;
    }
    Ok(result)
}

/// Scores a single candidate: sample-group means, Voronoi partition of the
/// data, objective about the recomputed means.
pub fn evaluate_candidate(data: &Dataset, sample: &SampleSet, candidate: &Candidate) -> Result<Clustering> {
    if candidate.labels.len() != sample.len() {
        return Err(Error::InvalidParameter(format!(
            "candidate labels {} sample members, sample has {}",
            candidate.labels.len(),
            sample.len()
        )));
    }
    let centers = candidate.centroids(sample.points())?;
    if centers.dim() != data.dim() {
        return Err(Error::Dimension {
            expected: data.dim(),
            found: centers.dim(),
        });
    }
    let assignment = data.iter().map(|x| nearest_center(x, &centers).0).collect();
    Clustering::from_assignment(data, assignment, candidate.k.max(centers.len()))
}

/// Streams the configured candidates of `sample` through `assign` and keeps
/// the lowest-objective partition of `data`. Ties within the relative
/// tolerance keep the earliest candidate.
pub(crate) fn search<F>(data: &Dataset, sample: SampleSet, cfg: &RsConfig, assign: &mut F) -> Result<RsResult>
where
    F: FnMut(&CentroidSet, &mut Vec<usize>) -> Result<()>,
{
    search_with(data, sample, cfg, Assigner::Custom(assign))
}

enum Assigner<'a, F> {
    Voronoi(Box<Screener>),
    Custom(&'a mut F),
}

fn search_with<F>(data: &Dataset, sample: SampleSet, cfg: &RsConfig, mut assigner: Assigner<'_, F>) -> Result<RsResult>
where
    F: FnMut(&CentroidSet, &mut Vec<usize>) -> Result<()>,
{
    cfg.validate(data.len())?;
    if sample.len() < cfg.k {
        return Err(Error::InvalidParameter(format!(
            "sample has {} members, need at least k={}",
            sample.len(),
            cfg.k
        )));
    }
    if sample.points().dim() != data.dim() {
        return Err(Error::Dimension {
            expected: data.dim(),
            found: sample.points().dim(),
        });
    }

    let mut state = SearchState::new(data, cfg.k);
    let mut visit = |c: Candidate| match &mut assigner {
        Assigner::Voronoi(screen) => state.consider_voronoi(data, screen, &sample, &c),
        Assigner::Custom(assign) => state.consider(data, &sample, &c, *assign),
    };
    match cfg.strategy {
        CandidateStrategy::ExhaustivePartitions => {
            enumerate_partitions(&sample, cfg.k, cfg.partition_cap)?.try_for_each(&mut visit)?
        }
        CandidateStrategy::ExhaustiveCenterSubsets => {
            enumerate_center_subsets(&sample, cfg.k)?.try_for_each(&mut visit)?
        }
        CandidateStrategy::RandomRestarts(restarts) => {
            let rng = RngStream::new(cfg.seed).derive(RESTART_STREAM);
            random_restart_candidates(&sample, cfg.k, restarts, &rng)?
                .into_iter()
                .try_for_each(&mut visit)?
        }
    }

    let Some((index, labels)) = state.best.take() else {
        return Err(Error::DegenerateSample(
            "no candidate produced a nonempty partition".into(),
        ));
    };
    let clustering = Clustering::from_assignment(data, labels, cfg.k)?;
    Ok(RsResult {
        clustering,
        best_candidate_index: index,
        candidates_evaluated: state.evaluated,
        sample,
    })
}

/// Relative margin within which a screened candidate gets an exact evaluation.
const SCREEN_MARGIN: f64 = 1e-6;

struct SearchState {
    scratch: PartitionScratch,
    labels: Vec<usize>,
    best: Option<(usize, Vec<usize>)>,
    best_objective: f64,
    evaluated: usize,
}

impl SearchState {
    fn new(data: &Dataset, k: usize) -> Self {
        Self {
            scratch: PartitionScratch::new(k, data.dim()),
            labels: Vec::with_capacity(data.len()),
            best: None,
            best_objective: f64::INFINITY,
            evaluated: 0,
        }
    }

    fn offer(&mut self, index: usize, objective: f64) {
        if self.best.is_none() || strictly_less(objective, self.best_objective) {
            self.best_objective = objective;
            match &mut self.best {
                Some((i, labels)) => {
                    *i = index;
                    labels.clone_from(&self.labels);
                }
                None => self.best = Some((index, self.labels.clone())),
            }
        }
    }

    fn consider<F>(&mut self, data: &Dataset, sample: &SampleSet, candidate: &Candidate, assign: &mut F) -> Result<()>
    where
        F: FnMut(&CentroidSet, &mut Vec<usize>) -> Result<()>,
    {
        let index = self.evaluated;
        self.evaluated += 1;
        let centers = candidate.centroids(sample.points())?;
        assign(&centers, &mut self.labels)?;
        let objective = self.scratch.objective(data, &self.labels);
        self.offer(index, objective);
        Ok(())
    }

    /// Nearest-center path: a bounded screening pass first, the exact
    /// evaluation only when the candidate can come close to the incumbent.
    fn consider_voronoi(
        &mut self,
        data: &Dataset,
        screen: &mut Screener,
        sample: &SampleSet,
        candidate: &Candidate,
    ) -> Result<()> {
        let index = self.evaluated;
        self.evaluated += 1;
        let centers = candidate.centroids(sample.points())?;
        if self.best.is_some() && !screen.may_beat(&centers, self.best_objective) {
            return Ok(());
        }
        self.labels.clear();
        self.labels.extend(data.iter().map(|x| nearest_center(x, &centers).0));
        let objective = self.scratch.objective(data, &self.labels);
        self.offer(index, objective);
        Ok(())
    }
}

// Points per block; a multiple of `LANES`.
const SCREEN_BLOCK: usize = 64;
const LANES: usize = 8;

#[derive(Debug, Clone, Copy)]
enum Wide {
    Baseline,
    #[cfg(target_arch = "x86_64")]
    Avx2,
    #[cfg(target_arch = "x86_64")]
    Avx512,
}

#[cfg(target_arch = "x86_64")]
cpufeatures::new!(has_avx2, "avx2");
#[cfg(target_arch = "x86_64")]
cpufeatures::new!(has_avx512, "avx512f");

impl Wide {
    fn detect() -> Self {
        #[cfg(target_arch = "x86_64")]
        {
            if has_avx512::get() {
                return Wide::Avx512;
            }
            if has_avx2::get() {
                return Wide::Avx2;
            }
        }
        Wide::Baseline
    }
}

/// Screening pass over mean-centered data, visited in fixed blocks.
///
/// Labels come from score differences against center 0,
/// `||c_j||^2 - ||c_0||^2 - 2 x.(c_j - c_0)`, over column-major blocks. After
/// each block the sum of squared deviations of the points seen so far from
/// their running group means, `sum ||x||^2 - sum_j ||s_j||^2 / n_j`, is a lower
/// bound on the final objective, because adding a point to a group never
/// lowers the group's deviation about its own mean. A candidate is dropped once
/// the bound passes the incumbent. The arithmetic differs from the exact path
/// only by rounding, which the margins absorb.
struct Screener {
    wide: Wide,
    dim: usize,
    /// Points per block. Column blocks are padded to `SCREEN_BLOCK` with
    /// zeros; padding lanes get labels but are never counted.
    lens: Vec<usize>,
    columns: Vec<f64>,
    shift: Vec<f64>,
    /// The same points row by row.
    rows: Vec<f64>,
    /// Squared norm total of blocks `0..=b`.
    prefix_sq: Vec<f64>,
    slack: f64,
    weights: Vec<f64>,
    bias: Vec<f64>,
    labels: [u32; SCREEN_BLOCK],
    /// Two banks of group sums, alternating by point, so that consecutive
    /// additions into one group do not wait on each other.
    sums: Vec<f64>,
    counts: Vec<usize>,
}

impl Screener {
    fn new(data: &Dataset, k: usize) -> Self {
        let n = data.len();
        let dim = data.dim();
        let mut shift = alloc::vec![0.0; dim];
        for x in data.iter() {
            shift.iter_mut().zip(x).for_each(|(s, v)| *s += v);
        }
        shift.iter_mut().for_each(|s| *s /= n as f64);
        // A fixed scrambled order keeps each prefix representative when the
        // input is sorted or grouped.
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by_key(|&i| splitmix64(i as u64));
        let mut rows = Vec::with_capacity(n * dim);
        for &i in &order {
            rows.extend(data.point(i).iter().zip(&shift).map(|(v, s)| v - s));
        }
        let mut columns = Vec::new();
        let mut lens = Vec::new();
        let mut prefix_sq = Vec::new();
        let mut total_sq = 0.0;
        for block in rows.chunks(SCREEN_BLOCK * dim) {
            lens.push(block.len() / dim);
            for t in 0..dim {
                let start = columns.len();
                columns.extend(block.iter().skip(t).step_by(dim));
                columns.resize(start + SCREEN_BLOCK, 0.0);
            }
            total_sq += block.iter().map(|v| v * v).sum::<f64>();
            prefix_sq.push(total_sq);
        }
        Self {
            wide: Wide::detect(),
            dim,
            lens,
            columns,
            shift,
            rows,
            prefix_sq,
            slack: total_sq * 1e-12,
            weights: alloc::vec![0.0; k * dim],
            bias: alloc::vec![0.0; k],
            labels: [0; SCREEN_BLOCK],
            sums: alloc::vec![0.0; 2 * k * dim],
            counts: alloc::vec![0; k],
        }
    }

    /// False when the candidate's objective provably exceeds `incumbent`
    /// beyond the screening margin.
    fn may_beat(&mut self, centers: &CentroidSet, incumbent: f64) -> bool {
        let dim = self.dim;
        let k = centers.len();
        let cutoff = incumbent * (1.0 + SCREEN_MARGIN) + self.slack;
        let base = centers.center(0);
        let base_sq: f64 = base.iter().zip(&self.shift).map(|(c, s)| (c - s) * (c - s)).sum();
        for (j, c) in centers.iter().enumerate().skip(1) {
            let mut bias = -base_sq;
            for t in 0..dim {
                let v = c[t] - self.shift[t];
                self.weights[j * dim + t] = -2.0 * (c[t] - base[t]);
                bias += v * v;
            }
            self.bias[j] = bias;
        }
        match self.wide {
            #[cfg(target_arch = "x86_64")]
            Wide::Avx512 => {
                // SAFETY: selected only after runtime detection of AVX-512F.
                unsafe { self.scan_avx512(k, cutoff) }
            }
            #[cfg(target_arch = "x86_64")]
            Wide::Avx2 => {
                // SAFETY: selected only after runtime detection of AVX2.
                unsafe { self.scan_avx2(k, cutoff) }
            }
            Wide::Baseline => self.scan(k, cutoff),
        }
    }

    // The same code compiled for wider registers. Lanes and summation order
    // are fixed in the source and no operations are fused, so every variant
    // produces identical bits.
    #[cfg(target_arch = "x86_64")]
    #[target_feature(enable = "avx512f")]
    fn scan_avx512(&mut self, k: usize, cutoff: f64) -> bool {
        self.scan(k, cutoff)
    }

    #[cfg(target_arch = "x86_64")]
    #[target_feature(enable = "avx2")]
    fn scan_avx2(&mut self, k: usize, cutoff: f64) -> bool {
        self.scan(k, cutoff)
    }

    #[inline(always)]
    fn scan(&mut self, k: usize, cutoff: f64) -> bool {
        let dim = self.dim;
        self.sums.fill(0.0);
        self.counts.fill(0);
        let blocks = self.columns.as_chunks::<SCREEN_BLOCK>().0.chunks_exact(dim);
        let rows = self.rows.chunks(SCREEN_BLOCK * dim);
        for (b, ((columns, rows), &len)) in blocks.zip(rows).zip(&self.lens).enumerate() {
            for g in 0..SCREEN_BLOCK / LANES {
                let mut best = [0.0; LANES];
                let mut label = [0u32; LANES];
                for j in 1..k {
                    let weights = &self.weights[j * dim..(j + 1) * dim];
                    let mut acc = [self.bias[j]; LANES];
                    for (column, &w) in columns.iter().zip(weights) {
                        let xs = &column.as_chunks::<LANES>().0[g];
                        for l in 0..LANES {
                            acc[l] += w * xs[l];
                        }
                    }
                    for l in 0..LANES {
                        if acc[l] < best[l] {
                            best[l] = acc[l];
                            label[l] = j as u32;
                        }
                    }
                }
                self.labels.as_chunks_mut::<LANES>().0[g] = label;
            }
            let (even, odd) = self.sums.split_at_mut(k * dim);
            for (i, (x, &l)) in rows.chunks_exact(dim).zip(&self.labels[..len]).enumerate() {
                let bank = if i % 2 == 0 { &mut *even } else { &mut *odd };
                let l = l as usize;
                self.counts[l] += 1;
                bank[l * dim..(l + 1) * dim]
                    .iter_mut()
                    .zip(x)
                    .for_each(|(s, v)| *s += v);
            }
            let mut explained = 0.0;
            for j in 0..k {
                if self.counts[j] > 0 {
                    let norm: f64 = (0..dim)
                        .map(|t| {
                            let v = even[j * dim + t] + odd[j * dim + t];
                            v * v
                        })
                        .sum();
                    explained += norm / self.counts[j] as f64;
                }
            }
            if self.prefix_sq[b] - explained > cutoff {
                return false;
            }
        }
        true
    }
}
