//! Geodesic regression on Riemannian manifolds with an
//! automatic-relevance-determination prior.
//!
//! The crate fits geodesic trends between covariates and manifold-valued
//! responses (unit spheres, preshape spheres of 2-D landmark configurations,
//! and Euclidean space), prunes unnecessary tangent directions through an
//! iteratively re-estimated per-column prior, and ships the Euclidean
//! baselines plus the evaluation statistics used to compare them.
//!
//! Per-record reductions and permutation replicates run data-parallel under
//! the `parallel` feature (enabled by default) with bitwise-identical
//! results to the sequential fallback.

pub mod baselines;
pub mod error;
pub mod eval;
pub mod exec;
pub mod linalg;
pub mod manifold;
pub mod quad;
pub mod regression;
pub mod shape;
pub mod stats;

pub use error::{GeomError, Result};
pub use manifold::{ManifoldKind, ManifoldPoint, TangentVector};
pub use regression::{Dataset, FitConfig, FitMode, FitReport, GeodesicModel, Record};
pub use stats::{QuadratureConfig, RiemannianNormal};
