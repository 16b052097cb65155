//! Generated datasets: standard normal clouds, well-separated blobs and the
//! 1024 x 10 stand-in used when the cloud cover file is not available.

use rand::Rng;
use rand_distr::StandardNormal;
use sampclust_core::{Dataset, RngStream};

use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SyntheticSpec {
    pub n: usize,
    pub d: usize,
}

impl SyntheticSpec {
    pub fn new(n: usize) -> Self {
        Self { n, d: 2 }
    }
}

/// `n` points with independent standard normal coordinates.
pub fn gen_synthetic(spec: SyntheticSpec, rng: &mut RngStream) -> Result<Dataset> {
    let coords = (0..spec.n * spec.d).map(|_| rng.sample(StandardNormal)).collect();
    Ok(Dataset::from_flat(spec.d, coords)?)
}

pub const STANDIN_ROWS: usize = 1024;
pub const STANDIN_DIM: usize = 10;
const STANDIN_WEIGHTS: [f64; 5] = [0.35, 0.25, 0.2, 0.12, 0.08];

/// A 1024 x 10 mixture of five correlated Gaussians with unequal weights.
///
/// Component means are N(0, 2^2) per coordinate and each component's
/// covariance is `A A^T` for a random `A` with N(0, 0.5^2) entries. Points are
/// drawn in order, so the file is a pure function of `seed`.
pub fn cloud_standin(seed: u64) -> Result<Dataset> {
    let mut rng = RngStream::new(seed);
    let d = STANDIN_DIM;
    let comps = STANDIN_WEIGHTS.len();
    let means: Vec<f64> = (0..comps * d)
        .map(|_| 2.0 * rng.sample::<f64, _>(StandardNormal))
        .collect();
    let mixing: Vec<f64> = (0..comps * d * d)
        .map(|_| 0.5 * rng.sample::<f64, _>(StandardNormal))
        .collect();
    let mut coords = Vec::with_capacity(STANDIN_ROWS * d);
    let mut z = vec![0.0; d];
    for _ in 0..STANDIN_ROWS {
        let c = pick_component(rng.unit());
        z.iter_mut().for_each(|v| *v = rng.sample(StandardNormal));
        let a = &mixing[c * d * d..(c + 1) * d * d];
        for r in 0..d {
            let v: f64 = a[r * d..(r + 1) * d].iter().zip(&z).map(|(a, z)| a * z).sum();
            coords.push(means[c * d + r] + v);
        }
    }
    Ok(Dataset::from_flat(d, coords)?)
}

fn pick_component(u: f64) -> usize {
    let mut acc = 0.0;
    for (i, w) in STANDIN_WEIGHTS.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    STANDIN_WEIGHTS.len() - 1
}

/// Groups of the given sizes around random centers `separation` apart on
/// average, with unit normal noise scaled by `spread`. Returns the data and
/// the generating group of every point. With `spread = 0` and one group all
/// points coincide.
pub fn blobs(
    sizes: &[usize],
    dim: usize,
    separation: f64,
    spread: f64,
    rng: &mut RngStream,
) -> Result<(Dataset, Vec<usize>)> {
    let centers: Vec<f64> = (0..sizes.len() * dim)
        .map(|_| separation * rng.sample::<f64, _>(StandardNormal))
        .collect();
    let mut coords = Vec::with_capacity(sizes.iter().sum::<usize>() * dim);
    let mut labels = Vec::new();
    for (g, &size) in sizes.iter().enumerate() {
        for _ in 0..size {
            for c in &centers[g * dim..(g + 1) * dim] {
                let noise: f64 = rng.sample(StandardNormal);
                coords.push(c + spread * noise);
            }
            labels.push(g);
        }
    }
    Ok((Dataset::from_flat(dim, coords)?, labels))
}
