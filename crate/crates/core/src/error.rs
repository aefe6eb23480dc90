use thiserror::Error;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{name} = {value} is outside the domain: {reason}")]
    Domain {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("order ell = {ell} exceeds the supported cap {cap}")]
    Order { ell: usize, cap: usize },

    #[error("harmonic index (ell = {ell}, m = {m}) is invalid")]
    Index { ell: usize, m: i64 },

    #[error("band limit {requested} exceeds the grid exactness degree {available}")]
    BandLimit { requested: usize, available: usize },

    #[error("{what} overflows the f64 range")]
    Overflow { what: &'static str },

    #[error(
        "quadrature did not converge: estimated error {estimate:e} exceeds tolerance {tolerance:e}"
    )]
    Convergence { estimate: f64, tolerance: f64 },

    #[error("grid mismatch: expected {expected} samples, found {found}")]
    GridMismatch { expected: usize, found: usize },

    #[error("Picard iteration failed to contract after {iterations} iterations (last ratio {ratio:.3e})")]
    NonContraction { iterations: usize, ratio: f64 },

    #[error("trace compatibility did not converge after {doublings} lambda doublings (lambda = {lambda})")]
    TraceCompatibility { doublings: usize, lambda: f64 },

    #[error(
        "kernel tolerance {target:e} unreachable within the node budget (achieved {achieved:e})"
    )]
    KernelTolerance { target: f64, achieved: f64 },

    #[error("precondition violated: {0}")]
    Precondition(&'static str),
}

pub(crate) fn domain(name: &'static str, value: f64, reason: &'static str) -> Error {
    Error::Domain {
        name,
        value,
        reason,
    }
}
