//! Error type shared across the crate.

use crate::manifold::ManifoldPoint;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, GeomError>;

#[derive(Debug, Clone, Error)]
pub enum GeomError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("points live on different manifolds")]
    ManifoldMismatch,

    #[error("tangent vector is not based at the given point")]
    BaseMismatch,

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("tangent norm {norm} reaches the cut locus (limit pi)")]
    CutLocus { norm: f64 },

    #[error("log map undefined: points are antipodal")]
    Antipodal,

    #[error("predicted point for record {record} lies at the cut locus of its response")]
    CutLocusAtRecord { record: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("singular design matrix")]
    SingularDesign,

    #[error("validation error: {0}")]
    Validation(String),

    #[error("Frechet mean did not converge in {iterations} iterations")]
    FrechetNonConvergence {
        iterations: usize,
        last: Box<ManifoldPoint>,
    },

    #[error("rejection sampler failed to accept after {attempts} attempts")]
    SamplerStalled { attempts: usize },
}
