//! Points, datasets, partitions and the squared-Euclidean objective.
//!
//! All distance comparisons are done on squared distances. Coordinates are
//! stored row-major in flat buffers; [`Point`] is the owned single-vector type.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

/// A finite d-dimensional real vector, `d >= 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidParameter("a point needs at least one coordinate".into()));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite { index: 0 });
        }
        Ok(Self(coords))
    }

    #[inline]
    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl AsRef<[f64]> for Point {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// An ordered collection of `n >= 1` points sharing dimension `d >= 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    coords: Vec<f64>,
    dim: usize,
}

impl Dataset {
    /// Builds a dataset from row-major coordinates.
    pub fn from_flat(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("dimension must be at least 1".into()));
        }
        if coords.is_empty() {
            return Err(Error::InvalidParameter("a dataset needs at least one point".into()));
        }
        if !coords.len().is_multiple_of(dim) {
            return Err(Error::Dimension {
                expected: dim,
                found: coords.len() % dim,
            });
        }
        if let Some(pos) = coords.iter().position(|c| !c.is_finite()) {
            return Err(Error::NonFinite { index: pos / dim });
        }
        Ok(Self { coords, dim })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let dim = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut coords = Vec::with_capacity(rows.len() * dim);
        for row in rows {
            let row = row.as_ref();
            if row.len() != dim {
                return Err(Error::Dimension {
                    expected: dim,
                    found: row.len(),
                });
            }
            coords.extend_from_slice(row);
        }
        Self::from_flat(dim, coords)
    }

    /// One-dimensional dataset, mostly handy in tests.
    pub fn from_scalars(values: &[f64]) -> Result<Self> {
        Self::from_flat(1, values.to_vec())
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    /// Never true for a constructed dataset.
    #[inline]
    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    #[inline]
    pub fn iter(&self) -> core::slice::ChunksExact<'_, f64> {
        self.coords.chunks_exact(self.dim)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.coords
    }

    /// The sub-dataset made of the given indices, in order, duplicates kept.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        let mut coords = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            coords.extend_from_slice(self.point(i));
        }
        Self::from_flat(self.dim, coords)
    }
}

/// An ordered list of `k >= 1` centers; the index of a center is its cluster id.
#[derive(Debug, Clone, PartialEq)]
pub struct CentroidSet {
    coords: Vec<f64>,
    dim: usize,
}

impl CentroidSet {
    pub fn from_flat(dim: usize, coords: Vec<f64>) -> Result<Self> {
        let data = Dataset::from_flat(dim, coords)?;
        Ok(Self {
            coords: data.coords,
            dim,
        })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let data = Dataset::from_rows(rows)?;
        Ok(Self {
            coords: data.coords,
            dim: data.dim,
        })
    }

    pub fn from_points(points: &[Point]) -> Result<Self> {
        Self::from_rows(points)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn center(&self, j: usize) -> &[f64] {
        &self.coords[j * self.dim..(j + 1) * self.dim]
    }

    #[inline]
    pub fn iter(&self) -> core::slice::ChunksExact<'_, f64> {
        self.coords.chunks_exact(self.dim)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.coords
    }
}

/// Global cluster-size bounds `l <= |X_i| <= u`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BalanceBounds {
    pub lower: usize,
    pub upper: usize,
}

impl BalanceBounds {
    pub fn new(lower: usize, upper: usize) -> Result<Self> {
        if upper == 0 || lower > upper {
            return Err(Error::InvalidParameter(format!(
                "balance bounds need 0 <= l <= u and u >= 1, got l={lower}, u={upper}"
            )));
        }
        Ok(Self { lower, upper })
    }

    /// No effective constraint for `n` points: `[0, n]`.
    pub fn unconstrained(n: usize) -> Self {
        Self {
            lower: 0,
            upper: n.max(1),
        }
    }

    /// Checks `k*l <= n <= k*u`.
    pub fn check_feasible(&self, n: usize, k: usize) -> Result<()> {
        let fits_lower = k.checked_mul(self.lower).is_some_and(|kl| kl <= n);
        let fits_upper = k.checked_mul(self.upper).is_none_or(|ku| n <= ku);
        if fits_lower && fits_upper {
            Ok(())
        } else {
            Err(Error::InfeasibleBounds {
                k,
                lower: self.lower,
                upper: self.upper,
                n,
            })
        }
    }

    #[inline]
    pub fn admits(&self, size: usize) -> bool {
        self.lower <= size && size <= self.upper
    }
}

/// A partition of a dataset's point indices into `k` labelled groups.
///
/// Groups may be empty. Centroids and the objective are always those of the
/// partition itself (each group's own mean), never of an external center set.
#[derive(Debug, Clone, PartialEq)]
pub struct Clustering {
    assignment: Vec<usize>,
    sizes: Vec<usize>,
    centroids: Vec<Option<Point>>,
    objective: f64,
}

impl Clustering {
    /// Builds the clustering induced by `assignment` with labels in `0..k`.
    pub fn from_assignment(data: &Dataset, assignment: Vec<usize>, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidParameter("k must be at least 1".into()));
        }
        if assignment.len() != data.len() {
            return Err(Error::InvalidParameter(format!(
                "assignment covers {} points, dataset has {}",
                assignment.len(),
                data.len()
            )));
        }
        if let Some(&bad) = assignment.iter().find(|&&a| a >= k) {
            return Err(Error::InvalidParameter(format!(
                "cluster label {bad} out of range 0..{k}"
            )));
        }
        let mut scratch = PartitionScratch::new(k, data.dim());
        let objective = scratch.objective(data, &assignment);
        let d = data.dim();
        let centroids = (0..k)
            .map(|j| (scratch.counts[j] > 0).then(|| Point(scratch.means[j * d..(j + 1) * d].to_vec())))
            .collect();
        Ok(Self {
            assignment,
            sizes: scratch.counts,
            centroids,
            objective,
        })
    }

    #[inline]
    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    #[inline]
    pub fn k(&self) -> usize {
        self.sizes.len()
    }

    #[inline]
    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    /// Per-cluster means; `None` flags an empty cluster.
    #[inline]
    pub fn centroids(&self) -> &[Option<Point>] {
        &self.centroids
    }

    #[inline]
    pub fn objective(&self) -> f64 {
        self.objective
    }

    pub fn nonempty_count(&self) -> usize {
        self.sizes.iter().filter(|&&s| s > 0).count()
    }

    /// Means of the nonempty clusters, in label order.
    pub fn centroid_set(&self) -> CentroidSet {
        let dim = self.centroids.iter().flatten().next().map_or(1, Point::dim);
        let coords = self
            .centroids
            .iter()
            .flatten()
            .flat_map(|p| p.coords().iter().copied())
            .collect();
        CentroidSet { coords, dim }
    }

    /// Point indices of each cluster, in label order.
    pub fn groups(&self) -> Vec<Vec<usize>> {
        let mut groups = vec![Vec::new(); self.k()];
        for (i, &a) in self.assignment.iter().enumerate() {
            groups[a].push(i);
        }
        groups
    }

    /// Nonempty groups sorted by their smallest member; equal for equal partitions.
    pub fn canonical_groups(&self) -> Vec<Vec<usize>> {
        let mut groups: Vec<_> = self.groups().into_iter().filter(|g| !g.is_empty()).collect();
        groups.sort();
        groups
    }

    /// Recomputes the objective from scratch by per-cluster SSE about each mean.
    pub fn recompute_objective(&self, data: &Dataset) -> Result<f64> {
        let mut total = 0.0;
        for group in self.groups().into_iter().filter(|g| !g.is_empty()) {
            let members: Vec<&[f64]> = group.iter().map(|&i| data.point(i)).collect();
            let c = centroid(members.iter().copied())?;
            total += sse(members.iter().copied(), c.coords())?;
        }
        Ok(total)
    }
}

/// Reusable buffers for evaluating many partitions of the same dataset.
///
/// Every objective value in the crate goes through [`PartitionScratch::objective`],
/// so two equal partitions always get bit-identical values whatever their labels.
#[derive(Debug, Clone)]
pub(crate) struct PartitionScratch {
    pub(crate) means: Vec<f64>,
    pub(crate) counts: Vec<usize>,
    dim: usize,
}

impl PartitionScratch {
    pub(crate) fn new(k: usize, dim: usize) -> Self {
        Self {
            means: vec![0.0; k * dim],
            counts: vec![0; k],
            dim,
        }
    }

    /// Sum over points, in index order, of the squared distance to the mean of
    /// the point's cluster. Leaves the means and sizes in `self`.
    pub(crate) fn objective(&mut self, data: &Dataset, assignment: &[usize]) -> f64 {
        let d = self.dim;
        self.means.fill(0.0);
        self.counts.fill(0);
        for (x, &a) in data.iter().zip(assignment) {
            self.counts[a] += 1;
            for (m, v) in self.means[a * d..(a + 1) * d].iter_mut().zip(x) {
                *m += v;
            }
        }
        for (mean, &count) in self.means.chunks_exact_mut(d).zip(&self.counts) {
            if count > 0 {
                let inv = count as f64;
                mean.iter_mut().for_each(|m| *m /= inv);
            }
        }
        data.iter()
            .zip(assignment)
            .map(|(x, &a)| squared_distance(x, &self.means[a * d..(a + 1) * d]))
            .sum()
    }
}

#[inline]
pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Index and squared distance of the nearest center; ties go to the lowest index.
#[inline]
pub fn nearest_center(x: &[f64], centers: &CentroidSet) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centers.iter().enumerate() {
        let dist = squared_distance(x, c);
        if dist < best.1 {
            best = (j, dist);
        }
    }
    best
}

/// Coordinate-wise arithmetic mean.
pub fn centroid<'a, I>(points: I) -> Result<Point>
where
    I: IntoIterator<Item = &'a [f64]>,
{
    let mut iter = points.into_iter();
    let first = iter.next().ok_or(Error::EmptyCluster)?;
    let mut sum = first.to_vec();
    let mut count = 1usize;
    for p in iter {
        if p.len() != sum.len() {
            return Err(Error::Dimension {
                expected: sum.len(),
                found: p.len(),
            });
        }
        sum.iter_mut().zip(p).for_each(|(s, v)| *s += v);
        count += 1;
    }
    let inv = count as f64;
    sum.iter_mut().for_each(|s| *s /= inv);
    Point::new(sum)
}

/// Sum of squared distances from each point to `v`; zero for no points.
pub fn sse<'a, I>(points: I, v: &[f64]) -> Result<f64>
where
    I: IntoIterator<Item = &'a [f64]>,
{
    let mut total = 0.0;
    for p in points {
        if p.len() != v.len() {
            return Err(Error::Dimension {
                expected: v.len(),
                found: p.len(),
            });
        }
        total += squared_distance(p, v);
    }
    Ok(total)
}

/// `(1/n) * sum ||x - c(X)||^2`, the trace of the empirical covariance.
pub fn total_variance(data: &Dataset) -> f64 {
    let c = centroid(data.iter()).expect("datasets are nonempty");
    let total = sse(data.iter(), c.coords()).expect("uniform dimension");
    total / data.len() as f64
}

/// Both sides of `sum ||x - v||^2 = sum ||x - c(X)||^2 + |X| * ||c(X) - v||^2`.
pub fn centroid_lemma_gap<'a, I>(points: I, v: &[f64]) -> Result<(f64, f64)>
where
    I: IntoIterator<Item = &'a [f64]> + Clone,
{
    let c = centroid(points.clone())?;
    if c.dim() != v.len() {
        return Err(Error::Dimension {
            expected: c.dim(),
            found: v.len(),
        });
    }
    let lhs = sse(points.clone(), v)?;
    let count = points.clone().into_iter().count() as f64;
    let rhs = sse(points, c.coords())? + count * squared_distance(c.coords(), v);
    Ok((lhs, rhs))
}

/// Assigns each point to its nearest center (lowest index on ties).
pub fn voronoi_assign(data: &Dataset, centers: &CentroidSet) -> Result<Clustering> {
    if centers.dim() != data.dim() {
        return Err(Error::Dimension {
            expected: data.dim(),
            found: centers.dim(),
        });
    }
    let assignment = data.iter().map(|x| nearest_center(x, centers).0).collect();
    Clustering::from_assignment(data, assignment, centers.len())
}
