//! Lloyd's k-means method and k-means++ seeding.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::index;

use crate::geometry::{nearest_center, squared_distance, CentroidSet, Clustering, Dataset};
use crate::rng::RngStream;
use crate::{Error, Result};

/// How Lloyd's method picks its starting centers.
#[derive(Debug, Clone, PartialEq)]
pub enum LloydInit {
    /// `k` distinct dataset points drawn uniformly.
    UniformRandomPoints,
    KmppSeeding,
    Provided(CentroidSet),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LloydConfig {
    pub max_iters: usize,
    /// Stop once the relative objective decrease falls to this value or below.
    pub tol: f64,
    pub init: LloydInit,
}

impl Default for LloydConfig {
    fn default() -> Self {
        Self {
            max_iters: 300,
            tol: 1e-9,
            init: LloydInit::UniformRandomPoints,
        }
    }
}

impl LloydConfig {
    pub fn with_init(init: LloydInit) -> Self {
        Self {
            init,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::InvalidParameter("max_iters must be at least 1".into()));
        }
        if self.tol.is_nan() || self.tol < 0.0 {
            return Err(Error::InvalidParameter("tol must be nonnegative".into()));
        }
        Ok(())
    }
}

/// Result of a Lloyd run together with its per-iteration objective values.
#[derive(Debug, Clone, PartialEq)]
pub struct LloydRun {
    pub clustering: Clustering,
    pub iterations: usize,
    pub history: Vec<f64>,
}

fn check_k(n: usize, k: usize) -> Result<()> {
    if k == 0 || n < k {
        return Err(Error::InvalidParameter(format!("need 1 <= k <= n, got k={k}, n={n}")));
    }
    Ok(())
}

/// k-means++ seeding: first center uniform, then each next one drawn with
/// probability proportional to the squared distance to the nearest chosen center.
pub fn kmpp_seed(data: &Dataset, k: usize, rng: &mut RngStream) -> Result<CentroidSet> {
    let n = data.len();
    check_k(n, k)?;
    let mut chosen = Vec::with_capacity(k);
    let first = rng.index(n);
    chosen.push(first);
    let mut d2: Vec<f64> = data.iter().map(|x| squared_distance(x, data.point(first))).collect();
    while chosen.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let target = rng.unit() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, &w) in d2.iter().enumerate() {
                if w > 0.0 {
                    acc += w;
                    pick = Some(i);
                    if acc > target {
                        break;
                    }
                }
            }
            pick.expect("total > 0 implies a positive weight")
        } else {
            // every point coincides with a chosen center
            rng.index(n)
        };
        chosen.push(next);
        let c = data.point(next);
        for (w, x) in d2.iter_mut().zip(data.iter()) {
            let dist = squared_distance(x, c);
            if dist < *w {
                *w = dist;
            }
        }
    }
    let coords = chosen.iter().flat_map(|&i| data.point(i).iter().copied()).collect();
    CentroidSet::from_flat(data.dim(), coords)
}

fn uniform_points(data: &Dataset, k: usize, rng: &mut RngStream) -> Result<CentroidSet> {
    let picks = index::sample(rng, data.len(), k);
    let coords = picks.iter().flat_map(|i| data.point(i).iter().copied()).collect();
    CentroidSet::from_flat(data.dim(), coords)
}

/// Lloyd's method. See [`lloyd_traced`] for the iteration history.
pub fn lloyd(data: &Dataset, k: usize, cfg: &LloydConfig, rng: &mut RngStream) -> Result<Clustering> {
    lloyd_traced(data, k, cfg, rng).map(|run| run.clustering)
}

/// Alternates nearest-center assignment and mean updates.
///
/// An empty cluster is reseeded with the point farthest from its assigned
/// center (taken from a cluster with at least two members). The objective is
/// non-increasing from one iteration to the next.
pub fn lloyd_traced(data: &Dataset, k: usize, cfg: &LloydConfig, rng: &mut RngStream) -> Result<LloydRun> {
    let n = data.len();
    check_k(n, k)?;
    cfg.validate()?;
    let mut centers = match &cfg.init {
        LloydInit::UniformRandomPoints => uniform_points(data, k, rng)?,
        LloydInit::KmppSeeding => kmpp_seed(data, k, rng)?,
        LloydInit::Provided(c) => {
            if c.len() != k || c.dim() != data.dim() {
                return Err(Error::InvalidParameter(format!(
                    "provided centers are {}x{}, expected {k}x{}",
                    c.len(),
                    c.dim(),
                    data.dim()
                )));
            }
            c.clone()
        }
    };

    let mut assignment = vec![0usize; n];
    let mut dist = vec![0.0f64; n];
    let mut history: Vec<f64> = Vec::new();
    let mut current: Option<Clustering> = None;

    for iter in 1..=cfg.max_iters {
        let mut counts = vec![0usize; k];
        for (i, x) in data.iter().enumerate() {
            let (j, d) = nearest_center(x, &centers);
            assignment[i] = j;
            dist[i] = d;
            counts[j] += 1;
        }
        for empty in 0..k {
            if counts[empty] > 0 {
                continue;
            }
            let donor = (0..n)
                .filter(|&i| counts[assignment[i]] > 1)
                .fold(None, |best: Option<usize>, i| match best {
                    Some(b) if dist[b] >= dist[i] => Some(b),
                    _ => Some(i),
                })
                .expect("n >= k leaves a cluster with two members");
            counts[assignment[donor]] -= 1;
            assignment[donor] = empty;
            counts[empty] = 1;
            dist[donor] = 0.0;
        }

        let unchanged = current
            .as_ref()
            .is_some_and(|c| c.assignment() == assignment.as_slice());
        let next = Clustering::from_assignment(data, assignment.clone(), k)?;
        let obj = next.objective();
        if let Some(&prev) = history.last() {
            debug_assert!(
                obj <= prev + 1e-12 * prev.max(1.0),
                "Lloyd objective increased from {prev} to {obj}"
            );
        }
        let prev = history.last().copied();
        history.push(obj);
        centers = next.centroid_set();
        current = Some(next);

        let converged = match prev {
            Some(prev) => unchanged || prev - obj <= cfg.tol * prev,
            None => false,
        };
        if converged || obj == 0.0 {
            return Ok(LloydRun {
                clustering: current.expect("set above"),
                iterations: iter,
                history,
            });
        }
    }
    Ok(LloydRun {
        clustering: current.expect("max_iters >= 1"),
        iterations: cfg.max_iters,
        history,
    })
}

/// k-means++ seeding followed by Lloyd iterations from those seeds.
pub fn kmeans_plus_plus(data: &Dataset, k: usize, cfg: &LloydConfig, rng: &mut RngStream) -> Result<Clustering> {
    let seeds = kmpp_seed(data, k, rng)?;
    let cfg = LloydConfig {
        init: LloydInit::Provided(seeds),
        ..cfg.clone()
    };
    lloyd(data, k, &cfg, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::approx_eq;

    fn line(values: &[f64]) -> Dataset {
        Dataset::from_scalars(values).unwrap()
    }

    #[test]
    fn two_step_trace_on_a_line() {
        // Hand trace: {0,1} and {9,10} split at once, means 0.5 and 9.5,
        // SSE 0.25 * 4 = 1; the second pass changes nothing.
        let x = line(&[0.0, 1.0, 9.0, 10.0]);
        let init = CentroidSet::from_rows(&[[0.0], [10.0]]).unwrap();
        let run = lloyd_traced(
            &x,
            2,
            &LloydConfig::with_init(LloydInit::Provided(init)),
            &mut RngStream::new(0),
        )
        .unwrap();
        assert!(run.iterations <= 2);
        assert!(approx_eq(run.clustering.objective(), 1.0));
        let centers = run.clustering.centroid_set();
        assert_eq!(centers.as_flat(), &[0.5, 9.5]);
    }

    #[test]
    fn optimal_start_is_a_fixed_point() {
        let x = line(&[0.0, 1.0, 9.0, 10.0]);
        let init = CentroidSet::from_rows(&[[0.5], [9.5]]).unwrap();
        let run = lloyd_traced(
            &x,
            2,
            &LloydConfig::with_init(LloydInit::Provided(init)),
            &mut RngStream::new(0),
        )
        .unwrap();
        assert_eq!(run.history.first().copied(), Some(1.0));
        assert!(run.history.iter().all(|&h| h == 1.0));
    }

    #[test]
    fn k_equal_n_reaches_zero() {
        let x = line(&[3.0, -1.0, 4.0, 1.5, 9.0]);
        for seed in 0..10 {
            let c = lloyd(&x, 5, &LloydConfig::default(), &mut RngStream::new(seed)).unwrap();
            assert_eq!(c.objective(), 0.0);
            let pp = kmeans_plus_plus(&x, 5, &LloydConfig::default(), &mut RngStream::new(seed)).unwrap();
            assert_eq!(pp.objective(), 0.0);
        }
    }

    #[test]
    fn too_few_points() {
        let x = line(&[1.0, 2.0]);
        assert!(matches!(
            lloyd(&x, 3, &LloydConfig::default(), &mut RngStream::new(0)),
            Err(Error::InvalidParameter(_))
        ));
        assert!(matches!(
            kmpp_seed(&x, 3, &mut RngStream::new(0)),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn empty_cluster_is_repaired() {
        // Both starting centers sit left of everything, so center 1 starts empty.
        let x = line(&[10.0, 11.0, 20.0, 21.0]);
        let init = CentroidSet::from_rows(&[[0.0], [-5.0]]).unwrap();
        let run = lloyd_traced(
            &x,
            2,
            &LloydConfig::with_init(LloydInit::Provided(init)),
            &mut RngStream::new(0),
        )
        .unwrap();
        assert_eq!(run.clustering.nonempty_count(), 2);
        assert!(approx_eq(run.clustering.objective(), 1.0));
    }

    #[test]
    fn history_is_monotone() {
        let mut rng = RngStream::new(99);
        let rows: Vec<[f64; 2]> = (0..200).map(|_| [rng.unit() * 10.0, rng.unit() * 3.0]).collect();
        let x = Dataset::from_rows(&rows).unwrap();
        for seed in 0..20 {
            let run = lloyd_traced(&x, 5, &LloydConfig::default(), &mut RngStream::new(seed)).unwrap();
            assert!(run.iterations <= 300);
            for w in run.history.windows(2) {
                assert!(w[1] <= w[0] * (1.0 + 1e-12), "{:?}", run.history);
            }
        }
    }

    #[test]
    fn kmpp_with_k_one_is_uniform() {
        // Binomial(40000, 1/4): sd 0.00217, so the [0.24, 0.26] window is 4.6 sd.
        let x = line(&[0.0, 1.0, 2.0, 3.0]);
        let mut rng = RngStream::new(1);
        let mut counts = [0usize; 4];
        for _ in 0..40_000 {
            let c = kmpp_seed(&x, 1, &mut rng).unwrap();
            counts[c.center(0)[0] as usize] += 1;
        }
        for c in counts {
            let f = c as f64 / 40_000.0;
            assert!((0.24..=0.26).contains(&f), "{counts:?}");
        }
    }

    #[test]
    fn kmpp_only_picks_positive_weights() {
        // X = {0, 0, 10}: once 0 is chosen the only positive D^2 is at 10.
        let x = line(&[0.0, 0.0, 10.0]);
        for seed in 0..200 {
            let c = kmpp_seed(&x, 2, &mut RngStream::new(seed)).unwrap();
            let (a, b) = (c.center(0)[0], c.center(1)[0]);
            assert_ne!(a, b, "seed {seed}");
        }
    }

    #[test]
    fn kmpp_second_center_follows_d2_weights() {
        // First center at 0 (index 0): weights 1 and 100, so P(10) = 100/101.
        let x = line(&[0.0, 1.0, 10.0]);
        let trials = 50_000;
        let mut firsts = 0usize;
        let mut tens = 0usize;
        let mut rng = RngStream::new(8);
        while firsts < trials {
            let c = kmpp_seed(&x, 2, &mut rng).unwrap();
            if c.center(0)[0] == 0.0 {
                firsts += 1;
                if c.center(1)[0] == 10.0 {
                    tens += 1;
                }
            }
        }
        let f = tens as f64 / trials as f64;
        assert!((f - 100.0 / 101.0).abs() <= 0.01, "{f}");
    }

    #[test]
    fn deterministic_under_seed() {
        let mut rng = RngStream::new(4);
        let rows: Vec<[f64; 2]> = (0..60).map(|_| [rng.unit(), rng.unit()]).collect();
        let x = Dataset::from_rows(&rows).unwrap();
        let a = kmeans_plus_plus(&x, 4, &LloydConfig::default(), &mut RngStream::new(17)).unwrap();
        let b = kmeans_plus_plus(&x, 4, &LloydConfig::default(), &mut RngStream::new(17)).unwrap();
        assert_eq!(a, b);
    }
}
