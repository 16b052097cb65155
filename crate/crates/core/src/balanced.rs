//! Random sampling for size-constrained k-clustering.
//!
//! Identical to [`crate::rs`] except that each candidate's centroid set is
//! turned into a partition of the data by a minimum-cost flow instead of
//! nearest-center assignment, so every cluster size lands in `[l, u]`.

use alloc::vec::Vec;

use crate::geometry::{squared_distance, BalanceBounds, CentroidSet, Clustering, Dataset};
use crate::mcf::balanced_assignment;
use crate::rng::SampleSet;
use crate::rs::{draw_sample, search, RsConfig, RsResult};
use crate::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct BalancedRsConfig {
    pub base: RsConfig,
    pub bounds: BalanceBounds,
}

/// Balanced random sampling with the run seed's sample stream.
pub fn run_balanced_rs(data: &Dataset, cfg: &BalancedRsConfig) -> Result<RsResult> {
    cfg.bounds.check_feasible(data.len(), cfg.base.k)?;
    let sample = draw_sample(data, &cfg.base)?;
    run_balanced_rs_on_sample(data, sample, cfg)
}

/// Same as [`run_balanced_rs`] with a given sample.
pub fn run_balanced_rs_on_sample(data: &Dataset, sample: SampleSet, cfg: &BalancedRsConfig) -> Result<RsResult> {
    // Feasibility depends on n, k, l, u only, so one check covers every candidate.
    cfg.bounds.check_feasible(data.len(), cfg.base.k)?;
    let bounds = cfg.bounds;
    let mut assign = |centers: &CentroidSet, labels: &mut Vec<usize>| {
        let sigma = balanced_assignment(data, centers, bounds)?;
        labels.clear();
        labels.extend_from_slice(&sigma.centers);
        prefer_low_index_on_ties(data, centers, bounds, labels);
        Ok(())
    };
    search(data, sample, &cfg.base, &mut assign)
}

/// Moves a point to a lower-indexed center at exactly the same distance when
/// both cluster sizes stay within bounds. Cost is unchanged; with slack
/// bounds the result coincides with nearest-center assignment.
fn prefer_low_index_on_ties(data: &Dataset, centers: &CentroidSet, bounds: BalanceBounds, labels: &mut [usize]) {
    let mut sizes = alloc::vec![0usize; centers.len()];
    labels.iter().for_each(|&j| sizes[j] += 1);
    for (x, label) in data.iter().zip(labels.iter_mut()) {
        let current = *label;
        let dist = squared_distance(x, centers.center(current));
        if let Some(j) = (0..current).find(|&j| {
            squared_distance(x, centers.center(j)) == dist && sizes[j] < bounds.upper && sizes[current] > bounds.lower
        }) {
            sizes[current] -= 1;
            sizes[j] += 1;
            *label = j;
        }
    }
}

/// True iff every cluster, empty ones included, has a size within the bounds.
pub fn verify_balanced(clustering: &Clustering, bounds: BalanceBounds) -> bool {
    clustering.sizes().iter().all(|&s| bounds.admits(s))
}
