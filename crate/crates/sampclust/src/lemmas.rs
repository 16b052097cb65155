//! Monte Carlo checks of the sampling lemmas and the RS approximation bound.
//!
//! Each check returns the measured quantity and the threshold it is held to;
//! [`run_lemma_suite`] runs all of them at fixed sizes.

use sampclust_core::candidates::{enumerate_partitions, CandidateStrategy};
use sampclust_core::geometry::{centroid, squared_distance, sse};
use sampclust_core::rng::sample_with_replacement;
use sampclust_core::rs::{run_rs, RsConfig};
use sampclust_core::{approx_eq, Clustering, Dataset, RngStream, SampleSet};

use crate::error::Result;
use crate::synthetic::{blobs, gen_synthetic, SyntheticSpec};

/// Knobs of the probabilistic statements; not inputs to any algorithm.
#[derive(Debug, Clone, PartialEq)]
pub struct TheoryParams {
    /// Failure probability in the Markov and approximation bounds.
    pub delta: f64,
    /// Relative slack in the Chernoff bound on sample group sizes.
    pub eta: f64,
    /// Every optimal cluster holds at least `mu * n` points.
    pub mu: f64,
    /// Share of the points in each optimal cluster.
    pub p: Vec<f64>,
}

impl Default for TheoryParams {
    fn default() -> Self {
        Self {
            delta: 0.5,
            eta: 0.5,
            mu: 1.0 / 3.0,
            p: vec![1.0 / 3.0; 3],
        }
    }
}

impl TheoryParams {
    /// One cluster holding every point, all points equal.
    pub fn degenerate() -> Self {
        Self {
            mu: 1.0,
            p: vec![1.0],
            ..Self::default()
        }
    }

    pub fn validate(&self) -> std::result::Result<(), String> {
        let open = |v: f64| v > 0.0 && v < 1.0;
        if !open(self.delta) || !open(self.eta) {
            return Err("delta and eta must lie in (0, 1)".into());
        }
        if !(0.0..=1.0).contains(&self.mu) {
            return Err("mu must lie in [0, 1]".into());
        }
        if self.p.is_empty()
            || self.p.iter().any(|&q| q.is_nan() || q < 0.0)
            || (self.p.iter().sum::<f64>() - 1.0).abs() > 1e-9
        {
            return Err("p must be a nonempty probability vector".into());
        }
        if self.p.iter().any(|&q| q + 1e-12 < self.mu) {
            return Err("every p(i) must be at least mu".into());
        }
        Ok(())
    }

    fn is_degenerate(&self) -> bool {
        self.mu >= 1.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub threshold: f64,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LemmaReport {
    pub checks: Vec<Check>,
}

impl LemmaReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UnbiasedOutcome {
    /// Mean of `||c(S) - c(X)||^2` over the trials.
    pub mean_sq_dev: f64,
    /// `total_variance(X) / m`.
    pub expected: f64,
    /// Largest per-coordinate distance between the mean of `c(S)` and
    /// `c(X)`, in standard errors.
    pub max_z: f64,
}

impl UnbiasedOutcome {
    pub fn rel_error(&self) -> f64 {
        if self.expected == 0.0 {
            if self.mean_sq_dev == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (self.mean_sq_dev - self.expected).abs() / self.expected
        }
    }

    pub fn passes(&self) -> bool {
        self.rel_error() <= 0.05 && self.max_z <= 3.0
    }
}

/// The sample mean as an estimator of the data mean.
pub fn check_unbiased(data: &Dataset, m: usize, trials: usize, rng: &mut RngStream) -> Result<UnbiasedOutcome> {
    let d = data.dim();
    let cx = centroid(data.iter())?.into_inner();
    let mut sum = vec![0.0; d];
    let mut sum_sq = vec![0.0; d];
    let mut dev = 0.0;
    for _ in 0..trials {
        let s = sample_with_replacement(data, m, rng)?;
        let cs = centroid(s.points().iter())?;
        for (j, &v) in cs.coords().iter().enumerate() {
            sum[j] += v;
            sum_sq[j] += v * v;
        }
        dev += squared_distance(cs.coords(), &cx);
    }
    let t = trials as f64;
    let max_z = (0..d)
        .map(|j| {
            let mean = sum[j] / t;
            let var = ((sum_sq[j] - t * mean * mean) / (t - 1.0)).max(0.0);
            let se = (var / t).sqrt();
            let gap = (mean - cx[j]).abs();
            if gap == 0.0 {
                0.0
            } else {
                gap / se
            }
        })
        .fold(0.0, f64::max);
    Ok(UnbiasedOutcome {
        mean_sq_dev: dev / t,
        expected: sampclust_core::geometry::total_variance(data) / m as f64,
        max_z,
    })
}

/// Frequency of `sse(X, c(S)) <= (1 + 1/(m delta)) sse(X, c(X))`.
pub fn check_markov(data: &Dataset, m: usize, delta: f64, trials: usize, rng: &mut RngStream) -> Result<f64> {
    let best = sse(data.iter(), centroid(data.iter())?.coords())?;
    let bound = (1.0 + 1.0 / (m as f64 * delta)) * best;
    let mut within = 0usize;
    for _ in 0..trials {
        let s = sample_with_replacement(data, m, rng)?;
        let cs = centroid(s.points().iter())?;
        let value = sse(data.iter(), cs.coords())?;
        within += (value <= bound) as usize;
    }
    Ok(within as f64 / trials as f64)
}

/// Frequency over `trials` samples of size `m` that every group `i` of
/// `labels` receives at least `(1 - eta) m p(i)` members, where `p(i)` is the
/// group's share of the points.
pub fn check_chernoff(labels: &[usize], m: usize, eta: f64, trials: usize, rng: &mut RngStream) -> f64 {
    let k = labels.iter().max().map_or(0, |&g| g + 1);
    let mut share = vec![0.0; k];
    labels.iter().for_each(|&g| share[g] += 1.0 / labels.len() as f64);
    let need: Vec<f64> = share.iter().map(|p| (1.0 - eta) * m as f64 * p).collect();
    let mut counts = vec![0usize; k];
    let mut within = 0usize;
    for _ in 0..trials {
        counts.iter_mut().for_each(|c| *c = 0);
        for _ in 0..m {
            counts[labels[rng.index(labels.len())]] += 1;
        }
        within += counts.iter().zip(&need).all(|(&c, &q)| c as f64 >= q) as usize;
    }
    within as f64 / trials as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApproxBoundConfig {
    pub instances: usize,
    pub n: usize,
    pub k: usize,
    pub m: usize,
    pub dim: usize,
    pub delta: f64,
    pub eta: f64,
    /// All points equal instead of separated groups.
    pub degenerate: bool,
}

impl ApproxBoundConfig {
    /// `1 + 1/((1 - eta) delta ln m)`.
    pub fn factor(&self) -> f64 {
        1.0 + 1.0 / ((1.0 - self.eta) * self.delta * (self.m as f64).ln())
    }

    /// `1 - delta - m^(-eta^2/2)`.
    pub fn threshold(&self) -> f64 {
        1.0 - self.delta - (self.m as f64).powf(-self.eta * self.eta / 2.0)
    }

    /// `ln m / m`, the balance the bound assumes.
    pub fn mu(&self) -> f64 {
        (self.m as f64).ln() / self.m as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApproxBoundOutcome {
    pub frequency: f64,
    /// Generated instances discarded because no optimal clustering was balanced enough.
    pub rejected: usize,
    /// Largest `RS / OPT` seen (1 when OPT is 0).
    pub worst_ratio: f64,
}

/// Frequency of `RS <= factor * OPT` over instances whose optimum is
/// `ln m / m`-balanced. RS enumerates every k-partition of its sample; OPT
/// comes from every k-partition of the data.
pub fn check_approx_bound(cfg: &ApproxBoundConfig, rng: &RngStream) -> Result<ApproxBoundOutcome> {
    let min_size = (cfg.mu() * cfg.n as f64).ceil() as usize;
    let factor = cfg.factor();
    let mut within = 0usize;
    let mut rejected = 0usize;
    let mut worst_ratio: f64 = 1.0;
    let (instances, samples) = (rng.derive(0), rng.derive(1));
    let mut draw = 0u64;
    for i in 0..cfg.instances {
        let (data, opt) = loop {
            let mut stream = instances.derive(draw);
            draw += 1;
            let data = if cfg.degenerate {
                constant_points(cfg.n, cfg.dim)?
            } else {
                let sizes = random_sizes(cfg.n, cfg.k, min_size, &mut stream);
                blobs(&sizes, cfg.dim, 3.0, 1.0, &mut stream)?.0
            };
            let (opt, balance) = optimum(&data, cfg.k)?;
            if balance >= min_size {
                break (data, opt);
            }
            rejected += 1;
        };
        let rs_cfg = RsConfig::new(
            cfg.k,
            cfg.m,
            CandidateStrategy::ExhaustivePartitions,
            samples.derive(i as u64).seed(),
        );
        let value = run_rs(&data, &rs_cfg)?.clustering.objective();
        let limit = factor * opt;
        within += (value <= limit || approx_eq(value, limit)) as usize;
        if opt > 0.0 {
            worst_ratio = worst_ratio.max(value / opt);
        }
    }
    Ok(ApproxBoundOutcome {
        frequency: within as f64 / cfg.instances as f64,
        rejected,
        worst_ratio,
    })
}

/// Optimal k-means objective by enumerating every k-partition, and the
/// largest smallest-cluster size among the optimal partitions.
pub fn optimum(data: &Dataset, k: usize) -> Result<(f64, usize)> {
    let whole = SampleSet::whole(data);
    let mut best = f64::INFINITY;
    let mut balance = 0;
    for candidate in enumerate_partitions(&whole, k, u128::MAX)? {
        let c = Clustering::from_assignment(data, candidate.labels, k)?;
        let smallest = c.sizes().iter().copied().min().unwrap_or(0);
        let value = c.objective();
        if approx_eq(value, best) {
            balance = balance.max(smallest);
            best = best.min(value);
        } else if value < best {
            best = value;
            balance = smallest;
        }
    }
    Ok((best, balance))
}

fn random_sizes(n: usize, k: usize, min_size: usize, rng: &mut RngStream) -> Vec<usize> {
    let mut sizes = vec![min_size; k];
    for _ in 0..n.saturating_sub(min_size * k) {
        sizes[rng.index(k)] += 1;
    }
    sizes
}

/// `n` copies of a point with small integer coordinates, so sums and means are exact.
fn constant_points(n: usize, dim: usize) -> Result<Dataset> {
    let row: Vec<f64> = (0..dim).map(|j| j as f64 - 1.0).collect();
    Ok(Dataset::from_flat(dim, row.repeat(n))?)
}

pub const UNBIASED_N: usize = 1000;
pub const UNBIASED_M: usize = 10;
pub const UNBIASED_TRIALS: usize = 20_000;
pub const MARKOV_N: usize = 500;
pub const MARKOV_M: usize = 20;
pub const MARKOV_TRIALS: usize = 10_000;
pub const MARKOV_DELTAS: [f64; 2] = [0.25, 0.5];
pub const CHERNOFF_N: usize = 300;
pub const CHERNOFF_M: usize = 50;
pub const CHERNOFF_TRIALS: usize = 5000;

/// Runs the four checks at their fixed sizes. With `mu = 1` every instance
/// is a single repeated point.
pub fn run_lemma_suite(params: &TheoryParams, rng: &RngStream) -> Result<LemmaReport> {
    params.validate().map_err(sampclust_core::Error::InvalidParameter)?;
    let degenerate = params.is_degenerate();
    let normal_or_constant = |n: usize, stream: &mut RngStream| -> Result<Dataset> {
        if degenerate {
            constant_points(n, 2)
        } else {
            gen_synthetic(SyntheticSpec::new(n), stream)
        }
    };
    let mut checks = Vec::new();

    let mut stream = rng.derive(1);
    let data = normal_or_constant(UNBIASED_N, &mut stream)?;
    let u = check_unbiased(&data, UNBIASED_M, UNBIASED_TRIALS, &mut stream)?;
    checks.push(Check {
        name: "sample-mean-unbiased".into(),
        measured: u.mean_sq_dev,
        threshold: u.expected,
        passed: u.passes(),
        detail: format!(
            "n={UNBIASED_N} m={UNBIASED_M} trials={UNBIASED_TRIALS}; relative error {:.4} (<= 0.05), max |z| {:.3} (<= 3)",
            u.rel_error(),
            u.max_z
        ),
    });

    let mut stream = rng.derive(2);
    let data = normal_or_constant(MARKOV_N, &mut stream)?;
    let mut deltas = MARKOV_DELTAS.to_vec();
    if !deltas.contains(&params.delta) {
        deltas.push(params.delta);
    }
    for delta in deltas {
        let freq = check_markov(&data, MARKOV_M, delta, MARKOV_TRIALS, &mut stream)?;
        checks.push(Check {
            name: format!("markov-tail(delta={delta})"),
            measured: freq,
            threshold: 1.0 - delta,
            passed: freq >= 1.0 - delta,
            detail: format!("n={MARKOV_N} m={MARKOV_M} trials={MARKOV_TRIALS}"),
        });
    }

    let mut stream = rng.derive(3);
    let sizes = group_sizes(CHERNOFF_N, &params.p);
    let labels = if degenerate {
        vec![0; CHERNOFF_N]
    } else {
        blobs(&sizes, 2, 50.0, 1.0, &mut stream)?.1
    };
    let freq = check_chernoff(&labels, CHERNOFF_M, params.eta, CHERNOFF_TRIALS, &mut stream);
    let threshold = 1.0 - (CHERNOFF_M as f64).powf(-params.eta * params.eta / 2.0);
    let required_mu = (CHERNOFF_M as f64).ln() / CHERNOFF_M as f64;
    checks.push(Check {
        name: "group-share-chernoff".into(),
        measured: freq,
        threshold,
        passed: freq >= threshold,
        detail: format!(
            "sizes={sizes:?} m={CHERNOFF_M} eta={} trials={CHERNOFF_TRIALS}; mu={:.4} vs ln m/m={required_mu:.4}",
            params.eta, params.mu
        ),
    });

    let cfg = ApproxBoundConfig {
        instances: 1000,
        n: 12,
        k: 2,
        m: 8,
        dim: 2,
        delta: params.delta,
        eta: params.eta,
        degenerate,
    };
    let out = check_approx_bound(&cfg, &rng.derive(4))?;
    checks.push(Check {
        name: "approx-bound".into(),
        measured: out.frequency,
        threshold: cfg.threshold(),
        passed: out.frequency >= cfg.threshold(),
        detail: format!(
            "instances={} n={} k={} m={} factor={:.4}; worst RS/OPT {:.4}; {} unbalanced draws replaced",
            cfg.instances,
            cfg.n,
            cfg.k,
            cfg.m,
            cfg.factor(),
            out.worst_ratio,
            out.rejected
        ),
    });
    Ok(LemmaReport { checks })
}

/// Splits `n` by the shares `p`, giving the rounding remainder to the first groups.
fn group_sizes(n: usize, p: &[f64]) -> Vec<usize> {
    let mut sizes: Vec<usize> = p.iter().map(|q| (q * n as f64 + 1e-9).floor() as usize).collect();
    let short = n - sizes.iter().sum::<usize>();
    sizes.iter_mut().take(short).for_each(|s| *s += 1);
    sizes
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn params_validation() {
        assert!(TheoryParams::default().validate().is_ok());
        assert!(TheoryParams::degenerate().validate().is_ok());
        let bad = TheoryParams {
            p: vec![0.5, 0.6],
            ..TheoryParams::default()
        };
        assert!(bad.validate().is_err());
        let bad = TheoryParams {
            delta: 1.0,
            ..TheoryParams::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn sizes_cover_n() {
        assert_eq!(group_sizes(300, &[1.0 / 3.0; 3]), vec![100, 100, 100]);
        assert_eq!(group_sizes(10, &[0.5, 0.25, 0.25]), vec![6, 2, 2]);
    }

    #[test]
    fn bound_constants() {
        let cfg = ApproxBoundConfig {
            instances: 1,
            n: 12,
            k: 2,
            m: 8,
            dim: 2,
            delta: 0.5,
            eta: 0.5,
            degenerate: false,
        };
        assert!((cfg.factor() - (1.0 + 4.0 / 8f64.ln())).abs() < 1e-12);
        assert!((cfg.threshold() - (0.5 - 8f64.powf(-0.125))).abs() < 1e-12);
    }

    #[test]
    fn optimum_of_a_line() {
        let x = Dataset::from_scalars(&[0.0, 1.0, 9.0, 10.0]).unwrap();
        let (opt, balance) = optimum(&x, 2).unwrap();
        assert_eq!((opt, balance), (1.0, 2));
    }

    #[test]
    fn degenerate_suite_passes_with_zero_spread() {
        let report = run_lemma_suite(&TheoryParams::degenerate(), &RngStream::new(0)).unwrap();
        assert!(report.all_passed(), "{report:?}");
        assert_eq!(report.checks[0].measured, 0.0);
        assert!(report
            .checks
            .iter()
            .filter(|c| c.name.starts_with("markov-tail"))
            .all(|c| c.measured == 1.0));
    }
}
