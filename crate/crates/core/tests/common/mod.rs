#![allow(dead_code)]

use sampclust_core::geometry::{squared_distance, BalanceBounds, CentroidSet, Clustering, Dataset};
use sampclust_core::RngStream;

/// Calls `visit` with every labelling of `n` points by `k` labels.
pub fn for_each_labelling(n: usize, k: usize, mut visit: impl FnMut(&[usize])) {
    let mut labels = vec![0; n];
    loop {
        visit(&labels);
        let mut i = 0;
        loop {
            if i == n {
                return;
            }
            labels[i] += 1;
            if labels[i] < k {
                break;
            }
            labels[i] = 0;
            i += 1;
        }
    }
}

/// Optimal k-means objective by trying every labelling.
pub fn brute_force_kmeans(data: &Dataset, k: usize) -> f64 {
    let mut best = f64::INFINITY;
    for_each_labelling(data.len(), k, |labels| {
        let c = Clustering::from_assignment(data, labels.to_vec(), k).unwrap();
        best = best.min(c.objective());
    });
    best
}

/// Optimal objective over partitions with every size within `bounds`.
pub fn brute_force_balanced(data: &Dataset, k: usize, bounds: BalanceBounds) -> f64 {
    let mut best = f64::INFINITY;
    for_each_labelling(data.len(), k, |labels| {
        let c = Clustering::from_assignment(data, labels.to_vec(), k).unwrap();
        if c.sizes().iter().all(|&s| bounds.admits(s)) {
            best = best.min(c.objective());
        }
    });
    best
}

/// Cheapest bound-feasible assignment of `data` to the fixed `centers`.
pub fn brute_force_assignment(data: &Dataset, centers: &CentroidSet, bounds: BalanceBounds) -> f64 {
    let k = centers.len();
    let mut best = f64::INFINITY;
    for_each_labelling(data.len(), k, |labels| {
        let mut sizes = vec![0; k];
        labels.iter().for_each(|&j| sizes[j] += 1);
        if sizes.iter().all(|&s| bounds.admits(s)) {
            let cost: f64 = labels
                .iter()
                .enumerate()
                .map(|(i, &j)| squared_distance(data.point(i), centers.center(j)))
                .sum();
            best = best.min(cost);
        }
    });
    best
}

pub fn uniform_cloud(rng: &mut RngStream, n: usize, dim: usize, scale: f64) -> Dataset {
    Dataset::from_flat(dim, (0..n * dim).map(|_| (rng.unit() - 0.5) * scale).collect()).unwrap()
}

/// Points scattered tightly around the given centers, `per` points each.
pub fn blobs(rng: &mut RngStream, centers: &[[f64; 2]], per: usize, spread: f64) -> Dataset {
    let rows: Vec<[f64; 2]> = centers
        .iter()
        .flat_map(|c| (0..per).map(|_| [c[0], c[1]]).collect::<Vec<_>>())
        .map(|c| [c[0] + (rng.unit() - 0.5) * spread, c[1] + (rng.unit() - 0.5) * spread])
        .collect();
    Dataset::from_rows(&rows).unwrap()
}

pub fn rel_close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1e-300)
}
