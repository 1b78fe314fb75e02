//! The Riemannian normal distribution: normalizing constant (with its
//! tau-derivative and log-domain variants), rejection sampling, Frechet
//! means, and the data log-likelihood.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{OnceLock, RwLock};

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{GeomError, Result};
use crate::exec;
use crate::linalg::{axpy, dot};
use crate::manifold::{distance, exp_map, log_map, project_tangent, ManifoldKind, ManifoldPoint};
use crate::quad::{shared_rule, unit_sphere_area};
use crate::regression::{Dataset, GeodesicModel};

/// Isotropic normal on a manifold: density proportional to
/// exp(-tau/2 * d(y, mean)^2).
#[derive(Debug, Clone)]
pub struct RiemannianNormal {
    pub mean: ManifoldPoint,
    pub precision: f64,
}

impl RiemannianNormal {
    pub fn new(mean: ManifoldPoint, precision: f64) -> Result<Self> {
        if !precision.is_finite() || precision <= 0.0 {
            return Err(GeomError::Validation("precision must be > 0".into()));
        }
        Ok(Self { mean, precision })
    }
}

/// Gauss-Legendre configuration for the radial integral on [0, pi].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuadratureConfig {
    pub nodes: usize,
}

impl QuadratureConfig {
    pub fn new(nodes: usize) -> Result<Self> {
        if nodes < 16 {
            return Err(GeomError::Validation(
                "quadrature needs at least 16 nodes".into(),
            ));
        }
        Ok(Self { nodes })
    }
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self { nodes: 128 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum CachedQuantity {
    LnConst,
    DtauOverConst,
}

type CacheKey = (usize, usize, i128, CachedQuantity);

// Readers share the lock; computed entries are inserted exclusively.
fn cache() -> &'static RwLock<HashMap<CacheKey, f64>> {
    static CACHE: OnceLock<RwLock<HashMap<CacheKey, f64>>> = OnceLock::new();
    CACHE.get_or_init(|| RwLock::new(HashMap::new()))
}

fn cache_key(ambient: usize, quad: QuadratureConfig, tau: f64, what: CachedQuantity) -> CacheKey {
    // tau keyed at 1e-12 resolution
    (ambient, quad.nodes, (tau * 1e12).round() as i128, what)
}

fn cached_or_compute(key: CacheKey, compute: impl FnOnce() -> f64) -> f64 {
    if let Some(v) = cache().read().unwrap().get(&key) {
        return *v;
    }
    let v = compute();
    cache().write().unwrap().insert(key, v);
    v
}

fn validate_tau(manifold: ManifoldKind, tau: f64) -> Result<()> {
    if !tau.is_finite() {
        return Err(GeomError::Validation("tau must be finite".into()));
    }
    if manifold.is_spherical() {
        if tau < 0.0 {
            return Err(GeomError::Domain("tau must be >= 0 on spheres".into()));
        }
    } else if tau <= 0.0 {
        return Err(GeomError::Domain(
            "tau must be > 0 on Euclidean space".into(),
        ));
    }
    Ok(())
}

/// log of sin(r)^m, safe at the endpoints.
fn ln_sin_pow(r: f64, m: usize) -> f64 {
    if m == 0 {
        return 0.0;
    }
    let s = r.sin();
    if s <= 0.0 {
        f64::NEG_INFINITY
    } else {
        m as f64 * s.ln()
    }
}

/// Normalizing constant of the Riemannian normal. On the sphere S^{n-1}
/// (ambient n) this is A_{n-2} * integral_0^pi exp(-tau r^2/2) sin^{n-2}(r) dr,
/// independent of the mean by homogeneity; Euclidean dim d gives the closed
/// form (2 pi / tau)^{d/2}.
pub fn normalizing_constant(
    manifold: ManifoldKind,
    tau: f64,
    quad: QuadratureConfig,
) -> Result<f64> {
    Ok(ln_normalizing_constant(manifold, tau, quad)?.exp())
}

/// log C(tau), evaluated in the log domain so it stays finite for any tau.
pub fn ln_normalizing_constant(
    manifold: ManifoldKind,
    tau: f64,
    quad: QuadratureConfig,
) -> Result<f64> {
    validate_tau(manifold, tau)?;
    match manifold {
        ManifoldKind::Euclidean { dim } => Ok(0.5 * dim as f64 * (2.0 * PI / tau).ln()),
        _ => {
            let n = manifold.ambient_dim();
            let key = cache_key(n, quad, tau, CachedQuantity::LnConst);
            Ok(cached_or_compute(key, || {
                let rule = shared_rule(quad.nodes);
                let m = n - 2;
                unit_sphere_area(m).ln()
                    + rule.ln_integrate(0.0, PI, |r| -0.5 * tau * r * r + ln_sin_pow(r, m))
            }))
        }
    }
}

/// dC/dtau. Always negative on spheres for tau >= 0; matches the closed-form
/// derivative -d/(2 tau) * C(tau) on Euclidean space.
pub fn normalizing_constant_dtau(
    manifold: ManifoldKind,
    tau: f64,
    quad: QuadratureConfig,
) -> Result<f64> {
    let ratio = dtau_ln_normalizing_constant(manifold, tau, quad)?;
    Ok(ratio * normalizing_constant(manifold, tau, quad)?)
}

/// C'(tau)/C(tau) = d/dtau ln C(tau), computed as a stable expectation:
/// -E[r^2/2] under the radial density.
pub fn dtau_ln_normalizing_constant(
    manifold: ManifoldKind,
    tau: f64,
    quad: QuadratureConfig,
) -> Result<f64> {
    validate_tau(manifold, tau)?;
    match manifold {
        ManifoldKind::Euclidean { dim } => Ok(-(dim as f64) / (2.0 * tau)),
        _ => {
            let n = manifold.ambient_dim();
            let key = cache_key(n, quad, tau, CachedQuantity::DtauOverConst);
            Ok(cached_or_compute(key, || {
                let rule = shared_rule(quad.nodes);
                let m = n - 2;
                -rule.expectation(
                    0.0,
                    PI,
                    |r| -0.5 * tau * r * r + ln_sin_pow(r, m),
                    |r| 0.5 * r * r,
                )
            }))
        }
    }
}

/// Draws one sample. Spheres use rejection sampling: the radius is proposed
/// from the half-Gaussian envelope exp(-tau r^2/2) truncated to [0, pi]
/// (uniform when tau = 0) and accepted with probability sin^{n-2}(r); the
/// direction is uniform on the unit tangent sphere at the mean. Euclidean
/// means take the standard Gaussian path. Deterministic for a fixed
/// generator state.
pub fn sample<R: Rng>(dist: &RiemannianNormal, rng: &mut R) -> Result<ManifoldPoint> {
    let manifold = dist.mean.manifold();
    let n = manifold.ambient_dim();
    match manifold {
        ManifoldKind::Euclidean { .. } => {
            let sigma = 1.0 / dist.precision.sqrt();
            let coords: Vec<f64> = dist
                .mean
                .coords()
                .iter()
                .map(|c| c + sigma * rng.sample::<f64, _>(StandardNormal))
                .collect();
            ManifoldPoint::new(manifold, coords)
        }
        _ => {
            let tau = dist.precision;
            let m = n - 2;
            // acceptance is E[sin^m r] under the envelope, which shrinks as
            // tau^{-m/2}; the budget covers the extreme-concentration tests
            let max_attempts = 20_000_000;
            let mut radius = None;
            for _ in 0..max_attempts {
                let r = if tau > 0.0 {
                    let z: f64 = rng.sample(StandardNormal);
                    let r = z.abs() / tau.sqrt();
                    if r >= PI {
                        continue;
                    }
                    r
                } else {
                    rng.random::<f64>() * PI
                };
                let accept = ln_sin_pow(r, m).exp();
                if rng.random::<f64>() < accept {
                    radius = Some(r);
                    break;
                }
            }
            let r = radius.ok_or(GeomError::SamplerStalled {
                attempts: max_attempts,
            })?;
            // uniform unit direction in the tangent space at the mean
            let mut dir;
            loop {
                let gauss: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
                let t = project_tangent(&dist.mean, &gauss)?;
                let len = t.norm();
                if len > 1e-8 {
                    dir = t.scaled(1.0 / len);
                    break;
                }
            }
            dir = dir.scaled(r);
            exp_map(&dist.mean, &dir)
        }
    }
}

/// Fixed point of mu <- exp(mu, mean of log(mu, y_i)), initialized at the
/// normalized Euclidean mean. Errors carry the last iterate when the
/// iteration fails to converge.
pub fn frechet_mean(points: &[ManifoldPoint], tol: f64, max_iter: usize) -> Result<ManifoldPoint> {
    if points.is_empty() {
        return Err(GeomError::Validation("Frechet mean of an empty set".into()));
    }
    if max_iter == 0 {
        return Err(GeomError::Validation("max_iter must be >= 1".into()));
    }
    let manifold = points[0].manifold();
    if points.iter().any(|p| p.manifold() != manifold) {
        return Err(GeomError::ManifoldMismatch);
    }
    let dim = manifold.ambient_dim();
    let mut acc = vec![0.0; dim];
    for p in points {
        axpy(&mut acc, 1.0, p.coords());
    }
    for a in &mut acc {
        *a /= points.len() as f64;
    }
    let mut mu = ManifoldPoint::project(manifold, &acc)?;
    let n = points.len() as f64;
    for it in 0..max_iter {
        let mut step = vec![0.0; dim];
        for p in points {
            axpy(&mut step, 1.0 / n, log_map(&mu, p)?.components());
        }
        let update = project_tangent(&mu, &step)?;
        let len = update.norm();
        mu = exp_map(&mu, &update)?;
        if len < tol {
            // regular-ball sanity check, applied post hoc
            if manifold.is_spherical() {
                for p in points {
                    if distance(&mu, p)? >= std::f64::consts::FRAC_PI_2 {
                        return Err(GeomError::Domain(
                            "points are not contained in a regular geodesic ball of the mean"
                                .into(),
                        ));
                    }
                }
            }
            return Ok(mu);
        }
        if it + 1 == max_iter {
            return Err(GeomError::FrechetNonConvergence {
                iterations: max_iter,
                last: Box::new(mu),
            });
        }
    }
    unreachable!()
}

pub const FRECHET_TOL: f64 = 1e-10;
pub const FRECHET_MAX_ITER: usize = 200;

/// Data log-likelihood: -N ln C(tau) - (tau/2) sum_n d(y_n, predict(x_n))^2.
/// A predicted point at the cut locus of its response is a domain error
/// naming the record.
pub fn log_likelihood(
    model: &GeodesicModel,
    data: &Dataset,
    quad: QuadratureConfig,
) -> Result<f64> {
    if data.is_empty() {
        return Ok(0.0);
    }
    if model.manifold() != data.manifold() {
        return Err(GeomError::ManifoldMismatch);
    }
    let n = data.len();
    let sq = squared_residual_sum(model, data)?;
    let lnc = ln_normalizing_constant(model.manifold(), model.tau(), quad)?;
    Ok(-(n as f64) * lnc - 0.5 * model.tau() * sq)
}

/// Sum of squared geodesic residuals d(y_n, predict(x_n))^2, evaluated as a
/// deterministic chunked reduction. Errors identify the offending record.
pub(crate) fn squared_residual_sum(model: &GeodesicModel, data: &Dataset) -> Result<f64> {
    let spherical = model.manifold().is_spherical();
    let terms: Vec<f64> = exec::try_map_indexed(data.len(), |i| {
        let rec = data.record(i);
        let pred = model.predict(&rec.covariates)?;
        if spherical {
            let c = dot(pred.coords(), rec.response.coords());
            if c < -1.0 + crate::manifold::ANTIPODAL_TOL {
                return Err(GeomError::CutLocusAtRecord { record: i });
            }
        }
        let d = distance(&rec.response, &pred)?;
        Ok(d * d)
    })?;
    Ok(exec::sum_indexed(terms.len(), |i| terms[i]))
}

/// Euclidean mean in ambient coordinates (used by plots and baselines).
pub fn ambient_mean(points: &[ManifoldPoint]) -> Vec<f64> {
    let dim = points[0].dim();
    let mut acc = vec![0.0; dim];
    for p in points {
        axpy(&mut acc, 1.0, p.coords());
    }
    for a in &mut acc {
        *a /= points.len() as f64;
    }
    acc
}
