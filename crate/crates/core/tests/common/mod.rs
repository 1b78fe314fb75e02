//! Shared helpers for seeded random geometry in the integration tests.

use geomreg_core::manifold::{project_tangent, ManifoldKind, ManifoldPoint, TangentVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_sphere_point(manifold: ManifoldKind, rng: &mut ChaCha8Rng) -> ManifoldPoint {
    loop {
        let raw: Vec<f64> = (0..manifold.ambient_dim())
            .map(|_| rng.sample(StandardNormal))
            .collect();
        if let Ok(p) = ManifoldPoint::project(manifold, &raw) {
            return p;
        }
    }
}

/// Random tangent vector at `p` with the given norm.
pub fn random_tangent(p: &ManifoldPoint, len: f64, rng: &mut ChaCha8Rng) -> TangentVector {
    loop {
        let raw: Vec<f64> = (0..p.dim()).map(|_| rng.sample(StandardNormal)).collect();
        let t = project_tangent(p, &raw).unwrap();
        let n = t.norm();
        if n > 1e-9 {
            return t.scaled(len / n);
        }
    }
}

/// Orthonormal basis of the tangent space at `p` (d-1 vectors on spheres,
/// d on Euclidean space), built by Gram-Schmidt over projected axes.
pub fn tangent_basis(p: &ManifoldPoint) -> Vec<TangentVector> {
    let d = p.dim();
    let want = p.manifold().intrinsic_dim();
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for axis in 0..d {
        if basis.len() == want {
            break;
        }
        let mut e = vec![0.0; d];
        e[axis] = 1.0;
        let mut v = project_tangent(p, &e).unwrap().components().to_vec();
        for b in &basis {
            let c: f64 = v.iter().zip(b).map(|(a, b)| a * b).sum();
            for (vi, bi) in v.iter_mut().zip(b) {
                *vi -= c * bi;
            }
        }
        let n: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-8 {
            basis.push(v.iter().map(|x| x / n).collect());
        }
    }
    assert_eq!(basis.len(), want);
    basis
        .into_iter()
        .map(|v| TangentVector::new(p.clone(), v).unwrap())
        .collect()
}
