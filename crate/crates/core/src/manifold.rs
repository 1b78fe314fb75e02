//! Riemannian geometry primitives on Euclidean space and unit spheres:
//! exponential/log maps, distances, tangent projection, parallel transport,
//! and the adjoint differentials of the exponential map used by the
//! regression gradients.
//!
//! All operations are pure functions; the types are immutable values.

use crate::error::{GeomError, Result};
use crate::linalg::{clamp_unit, dot, norm};

/// Tolerance for the unit-norm invariant of sphere points.
pub const POINT_TOL: f64 = 1e-12;
/// Tolerance for the tangency invariant of tangent vectors.
pub const TANGENT_TOL: f64 = 1e-10;
/// Inner products below -1 + ANTIPODAL_TOL make the log map direction
/// numerically meaningless.
pub const ANTIPODAL_TOL: f64 = 1e-9;

/// The supported manifolds. The preshape sphere of k 2-D landmarks is the
/// unit sphere in R^{2k} after centering and scaling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ManifoldKind {
    Euclidean { dim: usize },
    Sphere { ambient_dim: usize },
    PreshapeSphere { landmarks: usize },
}

impl ManifoldKind {
    pub fn euclidean(dim: usize) -> Result<Self> {
        if dim < 1 {
            return Err(GeomError::Validation("Euclidean dim must be >= 1".into()));
        }
        Ok(Self::Euclidean { dim })
    }

    pub fn sphere(ambient_dim: usize) -> Result<Self> {
        if ambient_dim < 2 {
            return Err(GeomError::Validation(
                "sphere ambient dim must be >= 2".into(),
            ));
        }
        Ok(Self::Sphere { ambient_dim })
    }

    pub fn preshape(landmarks: usize) -> Result<Self> {
        if landmarks < 3 {
            return Err(GeomError::Validation(
                "preshape sphere needs k >= 3 landmarks".into(),
            ));
        }
        Ok(Self::PreshapeSphere { landmarks })
    }

    pub fn ambient_dim(&self) -> usize {
        match *self {
            Self::Euclidean { dim } => dim,
            Self::Sphere { ambient_dim } => ambient_dim,
            Self::PreshapeSphere { landmarks } => 2 * landmarks,
        }
    }

    /// Dimension of the manifold itself (one less than ambient on spheres).
    pub fn intrinsic_dim(&self) -> usize {
        match self {
            Self::Euclidean { dim } => *dim,
            _ => self.ambient_dim() - 1,
        }
    }

    pub fn is_spherical(&self) -> bool {
        !matches!(self, Self::Euclidean { .. })
    }
}

/// A point on a declared manifold, stored in ambient coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct ManifoldPoint {
    manifold: ManifoldKind,
    coords: Vec<f64>,
}

impl ManifoldPoint {
    /// Validates dimensions, finiteness, and the sphere unit-norm invariant.
    pub fn new(manifold: ManifoldKind, coords: Vec<f64>) -> Result<Self> {
        if coords.len() != manifold.ambient_dim() {
            return Err(GeomError::DimensionMismatch {
                expected: manifold.ambient_dim(),
                got: coords.len(),
            });
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(GeomError::Validation("non-finite coordinate".into()));
        }
        if manifold.is_spherical() {
            let n = norm(&coords);
            if (n - 1.0).abs() > POINT_TOL {
                return Err(GeomError::Invariant(format!(
                    "sphere point norm {n} deviates from 1 by more than {POINT_TOL:e}"
                )));
            }
        }
        Ok(Self { manifold, coords })
    }

    /// Projects raw ambient coordinates onto the manifold (normalizes on
    /// spheres). Errors on a near-zero vector.
    pub fn project(manifold: ManifoldKind, coords: &[f64]) -> Result<Self> {
        if coords.len() != manifold.ambient_dim() {
            return Err(GeomError::DimensionMismatch {
                expected: manifold.ambient_dim(),
                got: coords.len(),
            });
        }
        if manifold.is_spherical() {
            let n = norm(coords);
            if n < 1e-12 {
                return Err(GeomError::Domain(
                    "cannot normalize a near-zero vector onto the sphere".into(),
                ));
            }
            let scaled: Vec<f64> = coords.iter().map(|c| c / n).collect();
            Self::new(manifold, scaled)
        } else {
            Self::new(manifold, coords.to_vec())
        }
    }

    pub fn manifold(&self) -> ManifoldKind {
        self.manifold
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }
}

/// An ambient vector attached to a base point and constrained to its
/// tangent space.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentVector {
    base: ManifoldPoint,
    vec: Vec<f64>,
}

impl TangentVector {
    /// Validates dimension and the tangency invariant.
    pub fn new(base: ManifoldPoint, vec: Vec<f64>) -> Result<Self> {
        if vec.len() != base.dim() {
            return Err(GeomError::DimensionMismatch {
                expected: base.dim(),
                got: vec.len(),
            });
        }
        if vec.iter().any(|c| !c.is_finite()) {
            return Err(GeomError::Validation("non-finite tangent component".into()));
        }
        if base.manifold().is_spherical() {
            let inner = dot(base.coords(), &vec);
            if inner.abs() > TANGENT_TOL {
                return Err(GeomError::Invariant(format!(
                    "tangency violated: <base, vec> = {inner:e}"
                )));
            }
        }
        Ok(Self { base, vec })
    }

    pub fn zero(base: ManifoldPoint) -> Self {
        let dim = base.dim();
        Self {
            base,
            vec: vec![0.0; dim],
        }
    }

    pub fn base(&self) -> &ManifoldPoint {
        &self.base
    }

    pub fn components(&self) -> &[f64] {
        &self.vec
    }

    pub fn norm(&self) -> f64 {
        norm(&self.vec)
    }

    pub fn scaled(&self, s: f64) -> TangentVector {
        TangentVector {
            base: self.base.clone(),
            vec: self.vec.iter().map(|v| v * s).collect(),
        }
    }
}

fn require_same_manifold(p: &ManifoldPoint, q: &ManifoldPoint) -> Result<()> {
    if p.manifold() != q.manifold() {
        return Err(GeomError::ManifoldMismatch);
    }
    Ok(())
}

fn require_based_at(v: &TangentVector, p: &ManifoldPoint) -> Result<()> {
    if v.base() != p {
        return Err(GeomError::BaseMismatch);
    }
    Ok(())
}

/// Follows the geodesic from `p` with initial velocity `v` for unit time.
/// Euclidean: `p + v` exactly. Sphere: cos(|v|) p + sin(|v|) v/|v|; rejects
/// |v| >= pi (cut locus).
pub fn exp_map(p: &ManifoldPoint, v: &TangentVector) -> Result<ManifoldPoint> {
    require_based_at(v, p)?;
    match p.manifold() {
        ManifoldKind::Euclidean { .. } => {
            let coords: Vec<f64> = p
                .coords()
                .iter()
                .zip(v.components())
                .map(|(a, b)| a + b)
                .collect();
            ManifoldPoint::new(p.manifold(), coords)
        }
        _ => {
            let theta = v.norm();
            if theta >= std::f64::consts::PI {
                return Err(GeomError::CutLocus { norm: theta });
            }
            if theta < 1e-300 {
                return Ok(p.clone());
            }
            let (c, s) = (theta.cos(), theta.sin());
            let coords: Vec<f64> = p
                .coords()
                .iter()
                .zip(v.components())
                .map(|(a, b)| c * a + s * b / theta)
                .collect();
            ManifoldPoint::project(p.manifold(), &coords)
        }
    }
}

/// Inverse of the exponential map: the tangent vector at `p` pointing along
/// the geodesic to `q`, with length equal to the geodesic distance.
pub fn log_map(p: &ManifoldPoint, q: &ManifoldPoint) -> Result<TangentVector> {
    require_same_manifold(p, q)?;
    match p.manifold() {
        ManifoldKind::Euclidean { .. } => {
            let vec: Vec<f64> = q
                .coords()
                .iter()
                .zip(p.coords())
                .map(|(a, b)| a - b)
                .collect();
            TangentVector::new(p.clone(), vec)
        }
        _ => {
            let c = clamp_unit(dot(p.coords(), q.coords()));
            if c < -1.0 + ANTIPODAL_TOL {
                return Err(GeomError::Antipodal);
            }
            // u = q - <p,q> p is tangent at p with |u| = sin(theta);
            // atan2(sin, cos) stays accurate at both ends of [0, pi]
            let u: Vec<f64> = q
                .coords()
                .iter()
                .zip(p.coords())
                .map(|(qi, pi)| qi - c * pi)
                .collect();
            let s = norm(&u);
            let theta = s.atan2(c);
            let factor = if s > 1e-200 { theta / s } else { 1.0 };
            let vec: Vec<f64> = u.iter().map(|ui| factor * ui).collect();
            tangent_at(p, &vec)
        }
    }
}

/// Geodesic distance. Sphere: arccos of the clamped inner product.
pub fn distance(p: &ManifoldPoint, q: &ManifoldPoint) -> Result<f64> {
    require_same_manifold(p, q)?;
    match p.manifold() {
        ManifoldKind::Euclidean { .. } => Ok(p
            .coords()
            .iter()
            .zip(q.coords())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()),
        _ => {
            let c = clamp_unit(dot(p.coords(), q.coords()));
            let u: Vec<f64> = q
                .coords()
                .iter()
                .zip(p.coords())
                .map(|(qi, pi)| qi - c * pi)
                .collect();
            Ok(norm(&u).atan2(c))
        }
    }
}

/// Orthogonal projection of an ambient vector onto the tangent space at `p`.
/// Idempotent; identity on Euclidean space.
pub fn project_tangent(p: &ManifoldPoint, w: &[f64]) -> Result<TangentVector> {
    if w.len() != p.dim() {
        return Err(GeomError::DimensionMismatch {
            expected: p.dim(),
            got: w.len(),
        });
    }
    match p.manifold() {
        ManifoldKind::Euclidean { .. } => TangentVector::new(p.clone(), w.to_vec()),
        _ => {
            let radial = dot(p.coords(), w);
            let vec: Vec<f64> = w
                .iter()
                .zip(p.coords())
                .map(|(wi, pi)| wi - radial * pi)
                .collect();
            TangentVector::new(p.clone(), vec)
        }
    }
}

/// Projects and constructs in one step; used after every arithmetic update
/// so float drift never accumulates past the tangency invariant.
fn tangent_at(p: &ManifoldPoint, raw: &[f64]) -> Result<TangentVector> {
    project_tangent(p, raw)
}

/// Parallel transport of `w` along the geodesic exp(p, t*v) from t=0 to t=1.
/// Norm-preserving; identity on Euclidean space.
pub fn parallel_transport(
    p: &ManifoldPoint,
    v: &TangentVector,
    w: &TangentVector,
) -> Result<TangentVector> {
    require_based_at(v, p)?;
    require_based_at(w, p)?;
    match p.manifold() {
        ManifoldKind::Euclidean { .. } => {
            let q = exp_map(p, v)?;
            TangentVector::new(q, w.components().to_vec())
        }
        _ => {
            let theta = v.norm();
            if theta >= std::f64::consts::PI {
                return Err(GeomError::CutLocus { norm: theta });
            }
            let q = exp_map(p, v)?;
            if theta < 1e-300 {
                return tangent_at(&q, w.components());
            }
            let u: Vec<f64> = v.components().iter().map(|c| c / theta).collect();
            let a = dot(w.components(), &u);
            let (ct, st) = (theta.cos(), theta.sin());
            // u transported to q is cos(theta) u - sin(theta) p; the
            // component of w orthogonal to span{p, u} is unchanged.
            let vec: Vec<f64> = (0..p.dim())
                .map(|i| {
                    let perp = w.components()[i] - a * u[i];
                    perp + a * (ct * u[i] - st * p.coords()[i])
                })
                .collect();
            tangent_at(&q, &vec)
        }
    }
}

/// Transports a tangent vector at q = exp(p, v) back to p along the same
/// geodesic (the inverse of [`parallel_transport`]).
fn transport_back(p: &ManifoldPoint, v: &TangentVector, w_at_q: &[f64]) -> Vec<f64> {
    let theta = v.norm();
    if theta < 1e-300 {
        return w_at_q.to_vec();
    }
    let u: Vec<f64> = v.components().iter().map(|c| c / theta).collect();
    let (ct, st) = (theta.cos(), theta.sin());
    // unit tangent of the geodesic at q, expressed in ambient coordinates
    let uq: Vec<f64> = u
        .iter()
        .zip(p.coords())
        .map(|(ui, pi)| ct * ui - st * pi)
        .collect();
    let a = dot(w_at_q, &uq);
    (0..p.dim())
        .map(|i| (w_at_q[i] - a * uq[i]) + a * u[i])
        .collect()
}

/// Adjoint of the differential of the exponential map with respect to the
/// base point, applied to `w` in the tangent space at exp(mu, v). On the
/// unit sphere the transported component parallel to v is unchanged and the
/// orthogonal components scale by cos(|v|); identity on Euclidean space.
pub fn dexp_base_adjoint(
    mu: &ManifoldPoint,
    v: &TangentVector,
    w: &TangentVector,
) -> Result<TangentVector> {
    require_based_at(v, mu)?;
    let q = exp_map(mu, v)?;
    require_based_at(w, &q)?;
    match mu.manifold() {
        ManifoldKind::Euclidean { .. } => TangentVector::new(mu.clone(), w.components().to_vec()),
        _ => {
            let theta = v.norm();
            if theta < 1e-300 {
                return tangent_at(mu, w.components());
            }
            let back = transport_back(mu, v, w.components());
            let u: Vec<f64> = v.components().iter().map(|c| c / theta).collect();
            let a = dot(&back, &u);
            let ct = theta.cos();
            let vec: Vec<f64> = (0..mu.dim())
                .map(|i| a * u[i] + ct * (back[i] - a * u[i]))
                .collect();
            tangent_at(mu, &vec)
        }
    }
}

/// Adjoint of the differential with respect to the initial velocity. On the
/// unit sphere the orthogonal components scale by sin(|v|)/|v| (limit 1 as
/// |v| -> 0); identity on Euclidean space.
pub fn dexp_velocity_adjoint(
    mu: &ManifoldPoint,
    v: &TangentVector,
    w: &TangentVector,
) -> Result<TangentVector> {
    require_based_at(v, mu)?;
    let q = exp_map(mu, v)?;
    require_based_at(w, &q)?;
    match mu.manifold() {
        ManifoldKind::Euclidean { .. } => TangentVector::new(mu.clone(), w.components().to_vec()),
        _ => {
            let theta = v.norm();
            if theta < 1e-300 {
                return tangent_at(mu, w.components());
            }
            let back = transport_back(mu, v, w.components());
            let u: Vec<f64> = v.components().iter().map(|c| c / theta).collect();
            let a = dot(&back, &u);
            let sc = theta.sin() / theta;
            let vec: Vec<f64> = (0..mu.dim())
                .map(|i| a * u[i] + sc * (back[i] - a * u[i]))
                .collect();
            tangent_at(mu, &vec)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn s2() -> ManifoldKind {
        ManifoldKind::sphere(3).unwrap()
    }

    fn pt(m: ManifoldKind, c: &[f64]) -> ManifoldPoint {
        ManifoldPoint::new(m, c.to_vec()).unwrap()
    }

    #[test]
    fn exp_zero_velocity_is_identity() {
        let p = pt(s2(), &[1.0, 0.0, 0.0]);
        let q = exp_map(&p, &TangentVector::zero(p.clone())).unwrap();
        assert_eq!(q, p);
    }

    #[test]
    fn exp_quarter_great_circle() {
        let p = pt(s2(), &[1.0, 0.0, 0.0]);
        let v = TangentVector::new(p.clone(), vec![0.0, PI / 2.0, 0.0]).unwrap();
        let q = exp_map(&p, &v).unwrap();
        assert!((q.coords()[0]).abs() < 1e-14);
        assert!((q.coords()[1] - 1.0).abs() < 1e-14);
        assert!((q.coords()[2]).abs() < 1e-14);
    }

    #[test]
    fn euclidean_exp_log_are_exact_add_sub() {
        let m = ManifoldKind::euclidean(2).unwrap();
        let p = pt(m, &[1.0, 2.0]);
        let v = TangentVector::new(p.clone(), vec![3.0, 4.0]).unwrap();
        let q = exp_map(&p, &v).unwrap();
        assert_eq!(q.coords(), &[4.0, 6.0]);
        let back = log_map(&p, &q).unwrap();
        // bit-level equality with plain subtraction
        assert_eq!(back.components()[0].to_bits(), (4.0f64 - 1.0).to_bits());
        assert_eq!(back.components()[1].to_bits(), (6.0f64 - 2.0).to_bits());
    }

    #[test]
    fn exp_rejects_cut_locus() {
        let p = pt(s2(), &[1.0, 0.0, 0.0]);
        let v = TangentVector::new(p.clone(), vec![0.0, PI, 0.0]).unwrap();
        assert!(matches!(exp_map(&p, &v), Err(GeomError::CutLocus { .. })));
    }

    #[test]
    fn exp_rejects_base_mismatch() {
        let p = pt(s2(), &[1.0, 0.0, 0.0]);
        let r = pt(s2(), &[0.0, 0.0, 1.0]);
        let v = TangentVector::new(r, vec![0.0, 0.1, 0.0]).unwrap();
        assert!(matches!(exp_map(&p, &v), Err(GeomError::BaseMismatch)));
    }

    #[test]
    fn log_of_same_point_is_zero() {
        let p = pt(s2(), &[0.0, 1.0, 0.0]);
        let v = log_map(&p, &p).unwrap();
        assert_eq!(v.norm(), 0.0);
    }

    #[test]
    fn log_inverts_quarter_circle() {
        let p = pt(s2(), &[1.0, 0.0, 0.0]);
        let q = pt(s2(), &[0.0, 1.0, 0.0]);
        let v = log_map(&p, &q).unwrap();
        assert!((v.components()[1] - PI / 2.0).abs() < 1e-14);
        assert!(v.components()[0].abs() < 1e-14);
        assert!(v.components()[2].abs() < 1e-14);
    }

    #[test]
    fn log_rejects_antipodal() {
        let p = pt(s2(), &[1.0, 0.0, 0.0]);
        let q = pt(s2(), &[-1.0, 0.0, 0.0]);
        assert!(matches!(log_map(&p, &q), Err(GeomError::Antipodal)));
    }

    #[test]
    fn distances() {
        let p = pt(s2(), &[1.0, 0.0, 0.0]);
        let q = pt(s2(), &[0.0, 1.0, 0.0]);
        let anti = pt(s2(), &[-1.0, 0.0, 0.0]);
        assert_eq!(distance(&p, &p).unwrap(), 0.0);
        assert!((distance(&p, &q).unwrap() - PI / 2.0).abs() < 1e-15);
        assert!((distance(&p, &anti).unwrap() - PI).abs() < 1e-15);
    }

    #[test]
    fn projection_removes_radial_component() {
        let p = pt(s2(), &[1.0, 0.0, 0.0]);
        let t = project_tangent(&p, &[5.0, 1.0, 0.0]).unwrap();
        assert_eq!(t.components(), &[0.0, 1.0, 0.0]);
        // idempotence
        let t2 = project_tangent(&p, t.components()).unwrap();
        assert_eq!(t2.components(), t.components());
    }

    #[test]
    fn transport_with_zero_velocity_is_identity() {
        let p = pt(s2(), &[1.0, 0.0, 0.0]);
        let w = TangentVector::new(p.clone(), vec![0.0, 0.3, -0.2]).unwrap();
        let out = parallel_transport(&p, &TangentVector::zero(p.clone()), &w).unwrap();
        assert_eq!(out.components(), w.components());
    }

    #[test]
    fn transport_keeps_orthogonal_component_on_s2() {
        let p = pt(s2(), &[1.0, 0.0, 0.0]);
        let v = TangentVector::new(p.clone(), vec![0.0, PI / 2.0, 0.0]).unwrap();
        let w = TangentVector::new(p.clone(), vec![0.0, 0.0, 1.0]).unwrap();
        let out = parallel_transport(&p, &v, &w).unwrap();
        assert!((out.base().coords()[1] - 1.0).abs() < 1e-14);
        assert!((out.components()[2] - 1.0).abs() < 1e-14);
        assert!(out.components()[0].abs() < 1e-14);
        assert!(out.components()[1].abs() < 1e-14);
    }

    #[test]
    fn base_adjoint_identity_at_zero_velocity() {
        let p = pt(s2(), &[1.0, 0.0, 0.0]);
        let w = TangentVector::new(p.clone(), vec![0.0, 0.4, 0.1]).unwrap();
        let out = dexp_base_adjoint(&p, &TangentVector::zero(p.clone()), &w).unwrap();
        assert_eq!(out.components(), w.components());
        let out = dexp_velocity_adjoint(&p, &TangentVector::zero(p.clone()), &w).unwrap();
        assert_eq!(out.components(), w.components());
    }

    #[test]
    fn base_adjoint_kills_orthogonal_at_quarter_circle() {
        // |v| = pi/2 scales orthogonal components by cos(pi/2) = 0
        let p = pt(s2(), &[1.0, 0.0, 0.0]);
        let v = TangentVector::new(p.clone(), vec![0.0, PI / 2.0, 0.0]).unwrap();
        let q = exp_map(&p, &v).unwrap();
        let w = TangentVector::new(q, vec![0.0, 0.0, 0.7]).unwrap();
        let out = dexp_base_adjoint(&p, &v, &w).unwrap();
        assert!(out.norm() < 1e-10);
    }

    #[test]
    fn velocity_adjoint_is_identity_on_euclidean() {
        let m = ManifoldKind::euclidean(3).unwrap();
        let p = pt(m, &[0.5, -1.0, 2.0]);
        let v = TangentVector::new(p.clone(), vec![1.0, 1.0, 1.0]).unwrap();
        let q = exp_map(&p, &v).unwrap();
        let w = TangentVector::new(q, vec![0.3, -0.4, 0.9]).unwrap();
        let out = dexp_velocity_adjoint(&p, &v, &w).unwrap();
        assert_eq!(out.components(), &[0.3, -0.4, 0.9]);
    }

    #[test]
    fn manifold_kind_validation() {
        assert!(ManifoldKind::euclidean(0).is_err());
        assert!(ManifoldKind::preshape(2).is_err());
        assert!(ManifoldKind::preshape(3).is_ok());
    }

    #[test]
    fn point_invariants_enforced() {
        assert!(ManifoldPoint::new(s2(), vec![1.0, 1.0, 0.0]).is_err());
        assert!(ManifoldPoint::new(s2(), vec![1.0, 0.0]).is_err());
        let p = pt(s2(), &[0.6, 0.8, 0.0]);
        assert!(TangentVector::new(p, vec![0.6, 0.8, 0.0]).is_err());
    }
}
