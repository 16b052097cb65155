//! Variance-based k-clustering by random sampling.
//!
//! The crate is `no_std` and only needs `alloc`. It contains:
//!
//! - [`geometry`]: points, datasets, partitions, SSE, Voronoi assignment.
//! - [`rng`]: seedable, platform-stable random streams and uniform sampling.
//! - [`candidates`]: the candidate k-clusterings of a sample.
//! - [`rs`]: the random-sampling clustering engine.
//! - [`baselines`]: Lloyd's method and k-means++.
//! - [`mcf`]: minimum-cost flow with arc lower bounds and the balanced
//!   assignment network.
//! - [`balanced`]: random sampling for size-constrained clustering.
#![no_std]

extern crate alloc;

pub mod balanced;
pub mod baselines;
pub mod candidates;
mod error;
pub mod geometry;
pub mod mcf;
pub mod rng;
pub mod rs;
mod transport;

pub use error::{Error, Result};
pub use geometry::{BalanceBounds, CentroidSet, Clustering, Dataset, Point};
pub use rng::{RngStream, SampleSet};

/// Relative tolerance used whenever two objective values are compared.
pub const REL_TOL: f64 = 1e-9;

/// Returns true when `a` and `b` agree to [`REL_TOL`] relative to the larger magnitude.
#[inline]
pub fn approx_eq(a: f64, b: f64) -> bool {
    (a - b).abs() <= REL_TOL * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

/// Returns true when `candidate` is smaller than `incumbent` by more than [`REL_TOL`].
#[inline]
pub fn strictly_less(candidate: f64, incumbent: f64) -> bool {
    candidate < incumbent && !approx_eq(candidate, incumbent)
}
