//! Candidate k-clusterings of a sample.
//!
//! Three strategies, from exact to scalable:
//!
//! - [`enumerate_partitions`]: every partition of the sample members into
//!   exactly `k` nonempty unlabelled groups (restricted growth strings).
//! - [`enumerate_center_subsets`]: every `k`-subset of distinct sample points
//!   used as Voronoi sites on the sample.
//! - [`random_restart_candidates`]: seeded k-means++ and Lloyd runs on the sample.

use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;

use crate::baselines::{kmeans_plus_plus, LloydConfig};
use crate::geometry::{squared_distance, CentroidSet, Dataset};
use crate::rng::{RngStream, SampleSet};
use crate::{Error, Result};

/// Default cap on the number of exhaustively enumerated partitions.
pub const DEFAULT_PARTITION_CAP: u128 = 10_000_000;

/// Largest `C(distinct, k)` for which benchmarks use exhaustive center subsets.
pub const BENCH_SUBSET_LIMIT: u128 = 2_000_000;

/// Restart count used by benchmarks when center subsets are too many.
pub const BENCH_RESTARTS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CandidateStrategy {
    ExhaustivePartitions,
    ExhaustiveCenterSubsets,
    RandomRestarts(usize),
}

impl CandidateStrategy {
    /// Center subsets while `C(distinct, k)` stays within [`BENCH_SUBSET_LIMIT`],
    /// otherwise [`BENCH_RESTARTS`] random restarts.
    pub fn benchmark_default(distinct: usize, k: usize) -> Self {
        if binomial(distinct as u128, k as u128) <= BENCH_SUBSET_LIMIT {
            Self::ExhaustiveCenterSubsets
        } else {
            Self::RandomRestarts(BENCH_RESTARTS)
        }
    }
}

/// A labelling of the sample members with labels in `0..k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Candidate {
    pub labels: Vec<usize>,
    pub k: usize,
}

impl Candidate {
    pub fn nonempty_count(&self) -> usize {
        let mut seen = vec![false; self.k];
        self.labels.iter().for_each(|&l| seen[l] = true);
        seen.into_iter().filter(|&s| s).count()
    }

    /// Means of the nonempty groups, in label order.
    pub fn centroids(&self, sample: &Dataset) -> Result<CentroidSet> {
        let d = sample.dim();
        let mut sums = vec![0.0; self.k * d];
        let mut counts = vec![0usize; self.k];
        for (x, &l) in sample.iter().zip(&self.labels) {
            counts[l] += 1;
            sums[l * d..(l + 1) * d].iter_mut().zip(x).for_each(|(s, v)| *s += v);
        }
        let mut coords = Vec::with_capacity(self.k * d);
        for (sum, &count) in sums.chunks_exact(d).zip(&counts) {
            if count > 0 {
                let inv = count as f64;
                coords.extend(sum.iter().map(|s| s / inv));
            }
        }
        if coords.is_empty() {
            return Err(Error::EmptyCluster);
        }
        CentroidSet::from_flat(d, coords)
    }

    /// Groups of member indices, ordered by first member; labels are ignored.
    pub fn canonical_groups(&self) -> Vec<Vec<usize>> {
        let mut groups = vec![Vec::new(); self.k];
        for (i, &l) in self.labels.iter().enumerate() {
            groups[l].push(i);
        }
        let mut groups: Vec<_> = groups.into_iter().filter(|g| !g.is_empty()).collect();
        groups.sort();
        groups
    }
}

/// Stirling number of the second kind `S(m, k)`, saturating at `u128::MAX`.
pub fn stirling2(m: usize, k: usize) -> u128 {
    if k > m {
        return 0;
    }
    if k == 0 {
        return u128::from(m == 0);
    }
    // row[j] = S(i, j)
    let mut row = vec![0u128; k + 1];
    row[0] = 1;
    for i in 1..=m {
        for j in (1..=k.min(i)).rev() {
            row[j] = (j as u128).saturating_mul(row[j]).saturating_add(row[j - 1]);
        }
        row[0] = 0;
    }
    row[k]
}

/// Binomial coefficient, saturating at `u128::MAX`.
pub fn binomial(n: u128, k: u128) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) / (i + 1) stays integral at every step
        match acc.checked_mul(n - i) {
            Some(v) => acc = v / (i + 1),
            None => return u128::MAX,
        }
    }
    acc
}

/// Iterator over restricted growth strings of length `m` with exactly `k` blocks.
#[derive(Debug, Clone)]
pub struct PartitionIter {
    current: Vec<usize>,
    k: usize,
    done: bool,
}

impl PartitionIter {
    fn new(m: usize, k: usize) -> Self {
        let mut it = Self {
            current: vec![0; m],
            k,
            done: m < k || k == 0,
        };
        if !it.done {
            it.fill_from(1, 0);
        }
        it
    }

    /// Smallest valid completion of positions `from..` given the prefix maximum.
    fn fill_from(&mut self, from: usize, mut max: usize) {
        let m = self.current.len();
        for j in from..m {
            let remaining = m - j;
            let needed = self.k - 1 - max;
            if needed >= remaining {
                max += 1;
                self.current[j] = max;
            } else {
                self.current[j] = 0;
            }
        }
    }

    fn advance(&mut self) {
        let m = self.current.len();
        let mut prefix_max = vec![0usize; m];
        for i in 1..m {
            prefix_max[i] = prefix_max[i - 1].max(self.current[i - 1]);
        }
        for i in (1..m).rev() {
            let bumped = self.current[i] + 1;
            if bumped > prefix_max[i] + 1 || bumped >= self.k {
                continue;
            }
            let max = prefix_max[i].max(bumped);
            if self.k - 1 - max < m - i {
                self.current[i] = bumped;
                self.fill_from(i + 1, max);
                return;
            }
        }
        self.done = true;
    }
}

impl Iterator for PartitionIter {
    type Item = Candidate;

    fn next(&mut self) -> Option<Candidate> {
        if self.done {
            return None;
        }
        let out = Candidate {
            labels: self.current.clone(),
            k: self.k,
        };
        self.advance();
        Some(out)
    }
}

/// Every partition of the sample members into exactly `k` nonempty groups.
///
/// Fails with [`Error::Capacity`] when `S(m, k)` exceeds `cap`.
pub fn enumerate_partitions(sample: &SampleSet, k: usize, cap: u128) -> Result<PartitionIter> {
    let m = sample.len();
    check_sample_size(m, k)?;
    let estimated = stirling2(m, k);
    if estimated > cap {
        return Err(Error::Capacity { estimated, cap });
    }
    Ok(PartitionIter::new(m, k))
}

fn check_sample_size(m: usize, k: usize) -> Result<()> {
    if k == 0 || m < k {
        return Err(Error::InvalidParameter(alloc::format!(
            "need 1 <= k <= m, got k={k}, m={m}"
        )));
    }
    Ok(())
}

/// Sample members with pairwise distinct coordinates, first occurrence first.
pub fn distinct_points(sample: &SampleSet) -> Vec<usize> {
    let mut seen = BTreeSet::new();
    sample
        .points()
        .iter()
        .enumerate()
        .filter(|(_, x)| seen.insert(x.iter().map(|v| v.to_bits()).collect::<Vec<u64>>()))
        .map(|(i, _)| i)
        .collect()
}

/// Iterator over the Voronoi partitions of a sample induced by `k`-subsets of
/// its distinct points.
#[derive(Debug, Clone)]
pub struct CenterSubsetIter<'a> {
    sample: &'a Dataset,
    sites: Vec<usize>,
    /// Squared distances, sample member major, to every site; empty when too large.
    table: Vec<f64>,
    combo: Vec<usize>,
    k: usize,
    done: bool,
}

impl CenterSubsetIter<'_> {
    fn step(&mut self) {
        let total = self.sites.len();
        let k = self.k;
        let mut i = k;
        while i > 0 {
            i -= 1;
            if self.combo[i] < total - k + i {
                self.combo[i] += 1;
                for j in i + 1..k {
                    self.combo[j] = self.combo[j - 1] + 1;
                }
                return;
            }
        }
        self.done = true;
    }

    fn labels(&self) -> Vec<usize> {
        let sites = self.sites.len();
        if !self.table.is_empty() {
            return self
                .table
                .chunks_exact(sites)
                .map(|row| {
                    let mut best = (0, f64::INFINITY);
                    for (j, &c) in self.combo.iter().enumerate() {
                        if row[c] < best.1 {
                            best = (j, row[c]);
                        }
                    }
                    best.0
                })
                .collect();
        }
        self.sample
            .iter()
            .map(|x| {
                let mut best = (0, f64::INFINITY);
                for (j, &c) in self.combo.iter().enumerate() {
                    let dist = squared_distance(x, self.sample.point(self.sites[c]));
                    if dist < best.1 {
                        best = (j, dist);
                    }
                }
                best.0
            })
            .collect()
    }
}

impl Iterator for CenterSubsetIter<'_> {
    type Item = Candidate;

    fn next(&mut self) -> Option<Candidate> {
        while !self.done {
            let candidate = Candidate {
                labels: self.labels(),
                k: self.k,
            };
            self.step();
            if candidate.nonempty_count() == candidate.k {
                return Some(candidate);
            }
        }
        None
    }
}

const SITE_TABLE_LIMIT: usize = 1 << 22;

/// Voronoi partitions of the sample for every `k`-subset of distinct sample points.
pub fn enumerate_center_subsets(sample: &SampleSet, k: usize) -> Result<CenterSubsetIter<'_>> {
    check_sample_size(sample.len(), k)?;
    let sites = distinct_points(sample);
    if sites.len() < k {
        return Err(Error::DegenerateSample(alloc::format!(
            "{} distinct points in the sample, need at least k={k}",
            sites.len()
        )));
    }
    let points = sample.points();
    let table = if points.len().saturating_mul(sites.len()) <= SITE_TABLE_LIMIT {
        points
            .iter()
            .flat_map(|x| sites.iter().map(move |&s| squared_distance(x, points.point(s))))
            .collect()
    } else {
        Vec::new()
    };
    Ok(CenterSubsetIter {
        sample: points,
        sites,
        table,
        combo: (0..k).collect(),
        k,
        done: false,
    })
}

/// `restarts` clusterings of the sample, each from k-means++ seeding and Lloyd
/// iterations on the sample, using substreams `0..restarts` of `rng`.
pub fn random_restart_candidates(
    sample: &SampleSet,
    k: usize,
    restarts: usize,
    rng: &RngStream,
) -> Result<Vec<Candidate>> {
    check_sample_size(sample.len(), k)?;
    if restarts == 0 {
        return Err(Error::InvalidParameter("restart count must be at least 1".into()));
    }
    let cfg = LloydConfig::default();
    (0..restarts as u64)
        .map(|r| {
            let c = kmeans_plus_plus(sample.points(), k, &cfg, &mut rng.derive(r))?;
            Ok(Candidate {
                labels: c.assignment().to_vec(),
                k,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::collections::BTreeSet;

    fn sample_of(values: &[f64]) -> SampleSet {
        SampleSet::whole(&Dataset::from_scalars(values).unwrap())
    }

    /// Distinct unlabelled k-partitions of m items by brute force over all
    /// k^m label vectors, canonicalised by relabelling in first-seen order.
    fn brute_force_partitions(m: usize, k: usize) -> BTreeSet<Vec<usize>> {
        let mut out = BTreeSet::new();
        let total = k.pow(m as u32);
        for code in 0..total {
            let mut labels = Vec::with_capacity(m);
            let mut c = code;
            for _ in 0..m {
                labels.push(c % k);
                c /= k;
            }
            let mut map = vec![usize::MAX; k];
            let mut next = 0;
            let canon: Vec<usize> = labels
                .iter()
                .map(|&l| {
                    if map[l] == usize::MAX {
                        map[l] = next;
                        next += 1;
                    }
                    map[l]
                })
                .collect();
            if next == k {
                out.insert(canon);
            }
        }
        out
    }

    #[test]
    fn stirling_values() {
        assert_eq!(stirling2(3, 2), 3);
        assert_eq!(stirling2(4, 4), 1);
        assert_eq!(stirling2(6, 3), 90);
        assert_eq!(stirling2(10, 3), 9330);
        assert_eq!(stirling2(0, 0), 1);
        assert_eq!(stirling2(2, 3), 0);
    }

    #[test]
    fn binomial_values() {
        assert_eq!(binomial(4, 2), 6);
        assert_eq!(binomial(200, 3), 1_313_400);
        assert_eq!(binomial(5, 0), 1);
        assert_eq!(binomial(3, 5), 0);
    }

    #[test]
    fn small_partition_counts() {
        let s = sample_of(&[0.0, 1.0, 2.0]);
        assert_eq!(enumerate_partitions(&s, 2, DEFAULT_PARTITION_CAP).unwrap().count(), 3);
        let s = sample_of(&[0.0, 1.0, 2.0, 3.0]);
        let all: Vec<_> = enumerate_partitions(&s, 4, DEFAULT_PARTITION_CAP).unwrap().collect();
        assert_eq!(all.len(), 1);
        assert_eq!(all[0].labels, vec![0, 1, 2, 3]);
    }

    #[test]
    fn six_into_three_matches_brute_force() {
        let oracle = brute_force_partitions(6, 3);
        assert_eq!(oracle.len(), 90);
        let s = sample_of(&[0.0, 1.0, 2.0, 3.0, 4.0, 5.0]);
        let got: Vec<Vec<usize>> = enumerate_partitions(&s, 3, DEFAULT_PARTITION_CAP)
            .unwrap()
            .map(|c| c.labels)
            .collect();
        let unique: BTreeSet<_> = got.iter().cloned().collect();
        assert_eq!(got.len(), 90);
        assert_eq!(unique, oracle);
    }

    #[test]
    fn partition_streams_match_brute_force_for_small_sizes() {
        for m in 1..=7 {
            for k in 1..=m {
                let s = sample_of(&(0..m).map(|i| i as f64).collect::<Vec<_>>());
                let got: BTreeSet<Vec<usize>> = enumerate_partitions(&s, k, DEFAULT_PARTITION_CAP)
                    .unwrap()
                    .map(|c| c.labels)
                    .collect();
                assert_eq!(got, brute_force_partitions(m, k), "m={m} k={k}");
                assert_eq!(got.len() as u128, stirling2(m, k));
            }
        }
    }

    #[test]
    fn partition_cap_is_enforced() {
        let s = sample_of(&(0..30).map(|i| i as f64).collect::<Vec<_>>());
        match enumerate_partitions(&s, 3, DEFAULT_PARTITION_CAP) {
            Err(Error::Capacity { estimated, cap }) => {
                assert_eq!(estimated, stirling2(30, 3));
                assert_eq!(cap, DEFAULT_PARTITION_CAP);
            }
            other => panic!("expected a capacity error, got {other:?}"),
        }
    }

    #[test]
    fn center_subsets_on_four_points() {
        let s = sample_of(&[0.0, 1.0, 9.0, 10.0]);
        let all: Vec<_> = enumerate_center_subsets(&s, 2).unwrap().collect();
        assert!(all.len() <= 6);
        // SSE of each candidate's groups about their own means.
        let best = all
            .iter()
            .min_by(|a, b| {
                let sa = crate::Clustering::from_assignment(s.points(), a.labels.clone(), 2).unwrap();
                let sb = crate::Clustering::from_assignment(s.points(), b.labels.clone(), 2).unwrap();
                sa.objective().total_cmp(&sb.objective())
            })
            .unwrap();
        assert_eq!(best.canonical_groups(), vec![vec![0, 1], vec![2, 3]]);
    }

    #[test]
    fn center_subsets_with_k_equal_distinct() {
        let s = sample_of(&[0.0, 0.0, 5.0, 7.0]);
        let all: Vec<_> = enumerate_center_subsets(&s, 3).unwrap().collect();
        assert_eq!(all.len(), 1);
        assert_eq!(all[0].canonical_groups(), vec![vec![0, 1], vec![2], vec![3]]);
    }

    #[test]
    fn center_subsets_need_enough_distinct_points() {
        let s = sample_of(&[1.0, 1.0, 1.0, 2.0]);
        assert!(matches!(
            enumerate_center_subsets(&s, 3),
            Err(Error::DegenerateSample(_))
        ));
    }

    #[test]
    fn restarts_are_deterministic() {
        let s = sample_of(&[0.0, 0.3, 5.0, 5.2, 9.0, 9.9]);
        let a = random_restart_candidates(&s, 3, 1, &RngStream::new(5)).unwrap();
        let b = random_restart_candidates(&s, 3, 1, &RngStream::new(5)).unwrap();
        assert_eq!(a.len(), 1);
        assert_eq!(a, b);
    }
}
