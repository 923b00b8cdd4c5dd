use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{what} outside its domain: {value}")]
    Domain { what: &'static str, value: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("unphysical covariance: symplectic eigenvalue {0} below 1/2")]
    InvalidState(f64),

    #[error("matrix factorization failed: {0}")]
    Numerical(&'static str),

    #[error("pgf argument {xi} outside radius {radius}")]
    PgfDomain { xi: f64, radius: f64 },

    #[error("Fock tail mass {tail} exceeds {bound}")]
    TailTooLarge { tail: f64, bound: f64 },

    #[error("Fock cutoff {cutoff} exceeds the memory budget")]
    CutoffExceeded { cutoff: usize },

    #[error("series convergence guard violated: N_B/|x| = {ratio} > N_B + 1 (eta = {eta})")]
    ConvergenceGuard { eta: f64, ratio: f64 },

    #[error("could not bracket a root of {0}")]
    Bracket(&'static str),
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn domain(what: &'static str, value: f64) -> Error {
    Error::Domain { what, value }
}
