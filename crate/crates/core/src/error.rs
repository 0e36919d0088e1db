use thiserror::Error;

/// Errors raised by the geometry kernels and the solvers.
///
/// Shape mismatches between operands are programming errors and panic
/// instead of surfacing here.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("rank-{rank} retraction is degenerate: singular values {sigma_r:e} and {sigma_next:e} are not separated")]
    RankDrop {
        rank: usize,
        sigma_r: f64,
        sigma_next: f64,
    },
    #[error("matrix is not a point of the manifold (constraint residual {0:e})")]
    NotOnManifold(f64),
    #[error("Gram-Schmidt could not build {dim} independent tangent vectors in {attempts} attempts")]
    BasisDegenerate { dim: usize, attempts: usize },
    #[error("iterate left the strict interior: {which}[{index}] = {value:e}")]
    InteriorViolation {
        which: &'static str,
        index: usize,
        value: f64,
    },
    #[error("dense representation is singular (condition estimate {condition:e})")]
    Singular { condition: f64 },
    #[error("an interior point method needs at least one inequality constraint")]
    NoInequalities,
    #[error("{what} has length {got}, expected {expected}")]
    Dimension {
        what: &'static str,
        got: usize,
        expected: usize,
    },
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
