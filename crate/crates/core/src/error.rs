use alloc::string::String;
use alloc::vec::Vec;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("cannot take the centroid of an empty collection")]
    EmptyCluster,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },
    #[error("non-finite coordinate at point {index}")]
    NonFinite { index: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("candidate enumeration needs {estimated} items, above the cap of {cap}")]
    Capacity { estimated: u128, cap: u128 },
    #[error("degenerate sample: {0}")]
    DegenerateSample(String),
    #[error("infeasible bounds: need k*l <= n <= k*u, got k={k}, l={lower}, u={upper}, n={n}")]
    InfeasibleBounds {
        k: usize,
        lower: usize,
        upper: usize,
        n: usize,
    },
    #[error("infeasible flow: {unrouted} unit(s) could not be routed across the cut {cut:?}")]
    InfeasibleFlow { unrouted: i64, cut: Vec<usize> },
    #[error("flow is not an integral unit assignment: {0}")]
    Integrality(String),
}
