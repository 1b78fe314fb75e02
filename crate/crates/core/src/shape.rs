//! Landmark-shape preprocessing (centering, scaling, Procrustes rotation
//! onto the preshape sphere) and the synthetic dataset generators.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{GeomError, Result};
use crate::linalg::norm;
use crate::manifold::{ManifoldKind, ManifoldPoint, TangentVector};
use crate::regression::{Dataset, GeodesicModel, Record};
use crate::stats::{sample, RiemannianNormal};

/// k 2-D landmarks plus covariate metadata (an age, an index, ...).
#[derive(Debug, Clone, PartialEq)]
pub struct LandmarkShape {
    pub points: Vec<[f64; 2]>,
    pub covariate: Vec<f64>,
}

impl LandmarkShape {
    pub fn new(points: Vec<[f64; 2]>, covariate: Vec<f64>) -> Result<Self> {
        if points.len() < 3 {
            return Err(GeomError::Validation(
                "a landmark shape needs k >= 3 points".into(),
            ));
        }
        if points
            .iter()
            .any(|p| !p[0].is_finite() || !p[1].is_finite())
            || covariate.iter().any(|c| !c.is_finite())
        {
            return Err(GeomError::Validation("non-finite landmark data".into()));
        }
        Ok(Self { points, covariate })
    }

    pub fn k(&self) -> usize {
        self.points.len()
    }
}

/// A collection of shapes with identical landmark count.
#[derive(Debug, Clone)]
pub struct ShapeSet {
    pub shapes: Vec<LandmarkShape>,
    pub covariate_names: Vec<String>,
}

impl ShapeSet {
    pub fn new(shapes: Vec<LandmarkShape>, covariate_names: Vec<String>) -> Result<Self> {
        if shapes.is_empty() {
            return Err(GeomError::Validation("empty shape set".into()));
        }
        let k = shapes[0].k();
        let q = shapes[0].covariate.len();
        if shapes.iter().any(|s| s.k() != k) {
            return Err(GeomError::Validation("shapes have differing k".into()));
        }
        if shapes.iter().any(|s| s.covariate.len() != q) {
            return Err(GeomError::Validation(
                "shapes have differing covariate lengths".into(),
            ));
        }
        if covariate_names.len() != q {
            return Err(GeomError::Validation(
                "covariate name count mismatch".into(),
            ));
        }
        Ok(Self {
            shapes,
            covariate_names,
        })
    }

    pub fn k(&self) -> usize {
        self.shapes[0].k()
    }

    /// Preshapes every shape into a dataset on Sphere(2k).
    pub fn to_dataset(&self) -> Result<Dataset> {
        let manifold = ManifoldKind::preshape(self.k())?;
        let records = self
            .shapes
            .iter()
            .map(|s| {
                Ok(Record {
                    covariates: s.covariate.clone(),
                    response: to_preshape(s)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Dataset::new(manifold, self.shapes[0].covariate.len(), records)
    }
}

fn centroid(points: &[[f64; 2]]) -> [f64; 2] {
    let n = points.len() as f64;
    let mut c = [0.0, 0.0];
    for p in points {
        c[0] += p[0] / n;
        c[1] += p[1] / n;
    }
    c
}

/// Centers, scales to unit Frobenius norm, and flattens row-major onto the
/// preshape sphere S^{2k-1}.
pub fn to_preshape(shape: &LandmarkShape) -> Result<ManifoldPoint> {
    let c = centroid(&shape.points);
    let mut flat = Vec::with_capacity(2 * shape.k());
    for p in &shape.points {
        flat.push(p[0] - c[0]);
        flat.push(p[1] - c[1]);
    }
    let size = norm(&flat);
    if size <= 1e-12 {
        return Err(GeomError::Domain(
            "degenerate shape: all landmarks coincide".into(),
        ));
    }
    for f in &mut flat {
        *f /= size;
    }
    ManifoldPoint::new(ManifoldKind::preshape(shape.k())?, flat)
}

/// Inverse of the preshape flattening: unflattens ambient coordinates back
/// into a k x 2 landmark configuration.
pub fn from_preshape(p: &ManifoldPoint, k: usize) -> Result<LandmarkShape> {
    if p.dim() != 2 * k {
        return Err(GeomError::DimensionMismatch {
            expected: 2 * k,
            got: p.dim(),
        });
    }
    let points = p.coords().chunks_exact(2).map(|c| [c[0], c[1]]).collect();
    LandmarkShape::new(points, Vec::new())
}

fn centered_unit(points: &[[f64; 2]]) -> Result<Vec<[f64; 2]>> {
    let c = centroid(points);
    let mut out: Vec<[f64; 2]> = points.iter().map(|p| [p[0] - c[0], p[1] - c[1]]).collect();
    let size = out
        .iter()
        .map(|p| p[0] * p[0] + p[1] * p[1])
        .sum::<f64>()
        .sqrt();
    if size <= 1e-12 {
        return Err(GeomError::Domain(
            "degenerate shape: all landmarks coincide".into(),
        ));
    }
    for p in &mut out {
        p[0] /= size;
        p[1] /= size;
    }
    Ok(out)
}

/// Optimal 2-D rotation angle taking `a` onto `b` in the least-squares
/// sense, via the cross-covariance solution.
pub fn optimal_rotation_angle(a: &[[f64; 2]], b: &[[f64; 2]]) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for (p, q) in a.iter().zip(b) {
        num += p[0] * q[1] - p[1] * q[0];
        den += p[0] * q[0] + p[1] * q[1];
    }
    num.atan2(den)
}

fn rotate(points: &[[f64; 2]], angle: f64) -> Vec<[f64; 2]> {
    let (s, c) = angle.sin_cos();
    points
        .iter()
        .map(|p| [c * p[0] - s * p[1], s * p[0] + c * p[1]])
        .collect()
}

/// Iterative Procrustes alignment: align each centered unit-norm
/// configuration to the running mean, re-estimate the mean, and repeat until
/// the mean stops moving. The output shapes are centered, unit-norm, and
/// rotation-aligned; covariates are preserved.
pub fn procrustes_align(set: &ShapeSet) -> Result<ShapeSet> {
    let preshapes: Vec<Vec<[f64; 2]>> = set
        .shapes
        .iter()
        .map(|s| centered_unit(&s.points))
        .collect::<Result<_>>()?;
    let k = set.k();
    let mut mean = preshapes[0].clone();
    let mut aligned = preshapes.clone();
    for _ in 0..200 {
        for (a, p) in aligned.iter_mut().zip(&preshapes) {
            let angle = optimal_rotation_angle(p, &mean);
            *a = rotate(p, angle);
        }
        let mut next = vec![[0.0, 0.0]; k];
        for a in &aligned {
            for (m, p) in next.iter_mut().zip(a) {
                m[0] += p[0] / aligned.len() as f64;
                m[1] += p[1] / aligned.len() as f64;
            }
        }
        let next = centered_unit(&next)?;
        let shift = next
            .iter()
            .zip(&mean)
            .map(|(a, b)| (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2))
            .sum::<f64>()
            .sqrt();
        mean = next;
        if shift < 1e-10 {
            break;
        }
    }
    let shapes = aligned
        .into_iter()
        .zip(&set.shapes)
        .map(|(pts, orig)| LandmarkShape::new(pts, orig.covariate.clone()))
        .collect::<Result<Vec<_>>>()?;
    ShapeSet::new(shapes, set.covariate_names.clone())
}

/// The base pentagon outline: 26 landmarks equally spaced (by perimeter)
/// along a regular pentagon with vertex radius 1, optionally stretched along
/// the first axis by `aspect`.
fn pentagon_outline(landmarks: usize, aspect: f64) -> Vec<[f64; 2]> {
    let vertices: Vec<[f64; 2]> = (0..5)
        .map(|j| {
            let theta = std::f64::consts::FRAC_PI_2 + 2.0 * std::f64::consts::PI * j as f64 / 5.0;
            [aspect * theta.cos(), theta.sin()]
        })
        .collect();
    let mut seg_len = Vec::with_capacity(5);
    let mut perimeter = 0.0;
    for j in 0..5 {
        let a = vertices[j];
        let b = vertices[(j + 1) % 5];
        let l = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
        seg_len.push(l);
        perimeter += l;
    }
    (0..landmarks)
        .map(|i| {
            let mut target = perimeter * i as f64 / landmarks as f64;
            let mut j = 0;
            while target > seg_len[j] {
                target -= seg_len[j];
                j = (j + 1) % 5;
            }
            let a = vertices[j];
            let b = vertices[(j + 1) % 5];
            let t = target / seg_len[j];
            [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]
        })
        .collect()
}

pub const PENTAGON_LANDMARKS: usize = 26;
/// Default per-unit-x aspect deformation of the pentagon generator.
pub const PENTAGON_DEFORM: f64 = 0.02;
/// Default landmark noise, relative to the unit shape size.
pub const PENTAGON_NOISE: f64 = 0.01;

/// Synthetic pentagons indexed by x = 1..=n: each shape is the base outline
/// shrunk by 1/(1 + 0.02 x), stretched by (1 + deform * x) along the first
/// axis, plus Gaussian landmark noise. Scaling alone is invisible on the
/// preshape sphere, so `deform` carries the shape signal; deform = 0
/// reproduces pure shrinking.
pub fn generate_pentagons(n: usize, noise: f64, deform: f64, seed: u64) -> Result<ShapeSet> {
    if n < 2 {
        return Err(GeomError::Validation(
            "pentagon set needs at least 2 shapes".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shapes = (1..=n)
        .map(|i| {
            let x = i as f64;
            let scale = 1.0 / (1.0 + 0.02 * x);
            let outline = pentagon_outline(PENTAGON_LANDMARKS, 1.0 + deform * x);
            let points = outline
                .iter()
                .map(|p| {
                    let nx: f64 = rng.sample(StandardNormal);
                    let ny: f64 = rng.sample(StandardNormal);
                    [scale * p[0] + noise * nx, scale * p[1] + noise * ny]
                })
                .collect();
            LandmarkShape::new(points, vec![x])
        })
        .collect::<Result<Vec<_>>>()?;
    ShapeSet::new(shapes, vec!["x".to_string()])
}

/// Draws a sphere dataset from a ground-truth model: covariates uniform on
/// [0, 1] per coordinate, responses sampled from the Riemannian normal
/// centered on the noiseless geodesic point.
pub fn generate_sphere_dataset(
    mu: &ManifoldPoint,
    columns: &[TangentVector],
    tau: f64,
    n: usize,
    seed: u64,
) -> Result<Dataset> {
    if !mu.manifold().is_spherical() {
        return Err(GeomError::Validation(
            "sphere generator needs a spherical manifold".into(),
        ));
    }
    let model = GeodesicModel::with_columns(mu.clone(), columns.to_vec(), tau.max(1e-12))?;
    let q = columns.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let records = (0..n)
        .map(|_| {
            let x: Vec<f64> = (0..q).map(|_| rng.random::<f64>()).collect();
            let center = model.predict(&x)?;
            let response = if tau > 0.0 {
                sample(&RiemannianNormal::new(center, tau)?, &mut rng)?
            } else {
                sample(
                    &RiemannianNormal {
                        mean: center,
                        precision: 0.0,
                    },
                    &mut rng,
                )?
            };
            Ok(Record {
                covariates: x,
                response,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(mu.manifold(), q, records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::distance;

    fn square_ish(cov: Vec<f64>) -> LandmarkShape {
        LandmarkShape::new(vec![[0.0, 0.0], [2.0, 0.0], [2.0, 1.0], [0.0, 1.0]], cov).unwrap()
    }

    #[test]
    fn preshape_is_centered_and_unit() {
        let p = to_preshape(&square_ish(vec![1.0])).unwrap();
        let coords = p.coords();
        let (mut cx, mut cy) = (0.0, 0.0);
        for c in coords.chunks_exact(2) {
            cx += c[0];
            cy += c[1];
        }
        assert!(cx.abs() < 1e-12 && cy.abs() < 1e-12);
        assert!((norm(coords) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn preshape_is_similarity_invariant() {
        let s = square_ish(vec![1.0]);
        let moved = LandmarkShape::new(
            s.points
                .iter()
                .map(|p| [7.0 * p[0] + 3.0, 7.0 * p[1] - 2.0])
                .collect(),
            vec![1.0],
        )
        .unwrap();
        let a = to_preshape(&s).unwrap();
        let b = to_preshape(&moved).unwrap();
        assert!(distance(&a, &b).unwrap() < 1e-12);
    }

    #[test]
    fn preshape_idempotent_on_normalized_input() {
        let s = square_ish(vec![1.0]);
        let p = to_preshape(&s).unwrap();
        let back = from_preshape(&p, s.k()).unwrap();
        let again =
            to_preshape(&LandmarkShape::new(back.points.clone(), vec![1.0]).unwrap()).unwrap();
        for (a, b) in p.coords().iter().zip(again.coords()) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn preshape_rejects_degenerate() {
        let s = LandmarkShape::new(vec![[1.0, 1.0]; 4], vec![0.0]).unwrap();
        assert!(to_preshape(&s).is_err());
    }

    #[test]
    fn from_preshape_rejects_dimension_mismatch() {
        let p = to_preshape(&square_ish(vec![1.0])).unwrap();
        assert!(from_preshape(&p, 5).is_err());
    }

    #[test]
    fn roundtrip_equals_centered_normalized_shape() {
        let s = square_ish(vec![1.0]);
        let p = to_preshape(&s).unwrap();
        let back = from_preshape(&p, s.k()).unwrap();
        let p2 = to_preshape(&LandmarkShape::new(back.points, vec![1.0]).unwrap()).unwrap();
        assert_eq!(p.coords(), p2.coords());
    }

    #[test]
    fn alignment_collapses_rotated_copies() {
        let base = centered_unit(&square_ish(vec![0.0]).points).unwrap();
        let shapes: Vec<LandmarkShape> = [0.0f64, 0.7, 1.9, -2.4]
            .iter()
            .enumerate()
            .map(|(i, angle)| LandmarkShape::new(rotate(&base, *angle), vec![i as f64]).unwrap())
            .collect();
        let set = ShapeSet::new(shapes, vec!["x".into()]).unwrap();
        let aligned = procrustes_align(&set).unwrap();
        let first = &aligned.shapes[0];
        for s in &aligned.shapes[1..] {
            for (a, b) in s.points.iter().zip(&first.points) {
                assert!((a[0] - b[0]).abs() < 1e-8 && (a[1] - b[1]).abs() < 1e-8);
            }
        }
        // idempotence
        let again = procrustes_align(&aligned).unwrap();
        for (s, t) in again.shapes.iter().zip(&aligned.shapes) {
            for (a, b) in s.points.iter().zip(&t.points) {
                assert!((a[0] - b[0]).abs() < 1e-10 && (a[1] - b[1]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn aligned_shapes_have_zero_optimal_rotation_to_mean() {
        let set = generate_pentagons(12, 0.02, PENTAGON_DEFORM, 5).unwrap();
        let aligned = procrustes_align(&set).unwrap();
        let k = aligned.k();
        let mut mean = vec![[0.0, 0.0]; k];
        for s in &aligned.shapes {
            for (m, p) in mean.iter_mut().zip(&s.points) {
                m[0] += p[0] / aligned.shapes.len() as f64;
                m[1] += p[1] / aligned.shapes.len() as f64;
            }
        }
        for s in &aligned.shapes {
            let angle = optimal_rotation_angle(&s.points, &mean);
            assert!(angle.abs() < 1e-8, "residual angle {angle}");
        }
    }

    #[test]
    fn alignment_never_increases_spread_around_the_mean() {
        let set = generate_pentagons(15, 0.03, PENTAGON_DEFORM, 21).unwrap();
        // rotate each shape by an arbitrary deterministic angle first
        let rotated: Vec<LandmarkShape> = set
            .shapes
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let pts = rotate(&centered_unit(&s.points).unwrap(), 0.71 * i as f64);
                LandmarkShape::new(pts, s.covariate.clone()).unwrap()
            })
            .collect();
        let rotated = ShapeSet::new(rotated, set.covariate_names.clone()).unwrap();
        let spread = |shapes: &[LandmarkShape]| -> f64 {
            let k = shapes[0].k();
            let mut mean = vec![[0.0f64, 0.0f64]; k];
            for s in shapes {
                for (m, p) in mean.iter_mut().zip(&s.points) {
                    m[0] += p[0] / shapes.len() as f64;
                    m[1] += p[1] / shapes.len() as f64;
                }
            }
            shapes
                .iter()
                .flat_map(|s| {
                    s.points
                        .iter()
                        .zip(&mean)
                        .map(|(p, m)| (p[0] - m[0]).powi(2) + (p[1] - m[1]).powi(2))
                })
                .sum()
        };
        let aligned = procrustes_align(&rotated).unwrap();
        assert!(spread(&aligned.shapes) <= spread(&rotated.shapes) + 1e-12);
    }

    #[test]
    fn pure_scaling_pentagons_share_one_preshape() {
        let set = generate_pentagons(10, 0.0, 0.0, 3).unwrap();
        let first = to_preshape(&set.shapes[0]).unwrap();
        for s in &set.shapes[1..] {
            let p = to_preshape(s).unwrap();
            assert!(distance(&first, &p).unwrap() < 1e-10);
        }
    }

    #[test]
    fn pentagon_generator_is_deterministic() {
        let a = generate_pentagons(8, 0.01, PENTAGON_DEFORM, 42).unwrap();
        let b = generate_pentagons(8, 0.01, PENTAGON_DEFORM, 42).unwrap();
        assert_eq!(a.shapes, b.shapes);
    }

    #[test]
    fn sphere_generator_concentrates_at_high_tau() {
        let s2 = ManifoldKind::sphere(3).unwrap();
        let mu = ManifoldPoint::new(s2, vec![0.0, 0.0, 1.0]).unwrap();
        let v = TangentVector::new(mu.clone(), vec![0.3, 0.0, 0.0]).unwrap();
        let model = GeodesicModel::with_columns(mu.clone(), vec![v.clone()], 1.0).unwrap();
        let data = generate_sphere_dataset(&mu, &[v], 1e9, 50, 11).unwrap();
        for rec in data.records() {
            let clean = model.predict(&rec.covariates).unwrap();
            assert!(distance(&clean, &rec.response).unwrap() < 1e-3);
        }
    }
}
