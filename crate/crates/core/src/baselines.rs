//! Comparison methods: ordinary least squares, Bayesian linear regression
//! with the ARD update, PCA, and tangent-space PGA.

use crate::error::{GeomError, Result};
use crate::linalg::{axpy, dot, norm, sub, Cholesky, SymMatrix};
use crate::manifold::{log_map, ManifoldKind, ManifoldPoint, TangentVector};
use crate::regression::{Dataset, FitConfig, Standardization, ALPHA_EPS, PRUNE_NORM_RATIO};
use crate::stats::{frechet_mean, FRECHET_MAX_ITER, FRECHET_TOL};

/// Euclidean linear model y = intercept + slopes * x with isotropic noise
/// precision and per-column ARD precisions. Columns are stored column-major
/// (`slope_columns[i]` is the d-vector multiplying covariate i).
#[derive(Debug, Clone)]
pub struct LinearModel {
    pub intercept: Vec<f64>,
    pub slope_columns: Vec<Vec<f64>>,
    pub precision: f64,
    pub alphas: Vec<f64>,
}

impl LinearModel {
    pub fn predict(&self, x: &[f64]) -> Vec<f64> {
        let mut y = self.intercept.clone();
        for (xi, col) in x.iter().zip(&self.slope_columns) {
            axpy(&mut y, *xi, col);
        }
        y
    }

    pub fn q(&self) -> usize {
        self.slope_columns.len()
    }
}

/// Mean plus orthonormal directions with non-increasing variances.
#[derive(Debug, Clone)]
pub struct PrincipalBasis {
    pub base: Vec<f64>,
    pub directions: Vec<Vec<f64>>,
    pub variances: Vec<f64>,
}

type Rows = Vec<Vec<f64>>;

fn euclidean_records(data: &Dataset) -> Result<(Rows, Rows)> {
    if !matches!(data.manifold(), ManifoldKind::Euclidean { .. }) {
        return Err(GeomError::Validation(
            "baseline regressions require a Euclidean dataset".into(),
        ));
    }
    let xs = data
        .records()
        .iter()
        .map(|r| r.covariates.clone())
        .collect();
    let ys = data
        .records()
        .iter()
        .map(|r| r.response.coords().to_vec())
        .collect();
    Ok((xs, ys))
}

/// Closed-form least squares; tau is the reciprocal mean squared residual
/// per scalar coordinate. Degenerate designs (a constant covariate) error.
pub fn fit_ols(data: &Dataset) -> Result<LinearModel> {
    if data.len() < 2 {
        return Err(GeomError::Validation("OLS needs at least 2 records".into()));
    }
    let (xs, ys) = euclidean_records(data)?;
    let n = xs.len();
    let q = data.q();
    let d = ys[0].len();

    // normal equations over the augmented design [1, x]
    let p = q + 1;
    let mut ata = SymMatrix::zeros(p);
    for x in &xs {
        let mut row = Vec::with_capacity(p);
        row.push(1.0);
        row.extend_from_slice(x);
        for i in 0..p {
            for j in i..p {
                let v = ata.get(i, j) + row[i] * row[j];
                ata.set(i, j, v);
                ata.set(j, i, v);
            }
        }
    }
    let chol = Cholesky::new(&ata)?;
    let mut intercept = vec![0.0; d];
    let mut slope_columns = vec![vec![0.0; d]; q];
    for j in 0..d {
        let mut rhs = vec![0.0; p];
        for (x, y) in xs.iter().zip(&ys) {
            rhs[0] += y[j];
            for (r, xi) in rhs[1..].iter_mut().zip(x) {
                *r += xi * y[j];
            }
        }
        let beta = chol.solve(&rhs);
        intercept[j] = beta[0];
        for k in 0..q {
            slope_columns[k][j] = beta[k + 1];
        }
    }
    let model = LinearModel {
        intercept,
        slope_columns,
        precision: 1.0,
        alphas: vec![0.0; q],
    };
    let sq: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let r = sub(y, &model.predict(x));
            dot(&r, &r)
        })
        .sum();
    let denom = (n * d) as f64;
    let precision = if sq > 0.0 { denom / sq } else { 1e12 };
    Ok(LinearModel { precision, ..model })
}

/// Bayesian linear regression with the ARD update: alternates the
/// closed-form ridge solve for the slopes with alpha_i = N/|v_i|^2, the
/// closed-form tau, and the same guarded pruning as the geodesic fit.
/// Covariates are standardized internally exactly as regression::fit does;
/// the returned model is in raw covariate units.
pub fn fit_blr_ard(data: &Dataset, cfg: &FitConfig) -> Result<LinearModel> {
    cfg.validate()?;
    if data.len() < 2 {
        return Err(GeomError::Validation("BLR needs at least 2 records".into()));
    }
    let (xs_raw, ys) = euclidean_records(data)?;
    let n = data.len();
    let q = data.q();
    let d = ys[0].len();

    let standardization = if cfg.covariate_standardization {
        Some(Standardization::fit(data.records(), q))
    } else {
        None
    };
    let xs: Vec<Vec<f64>> = xs_raw
        .iter()
        .map(|x| match &standardization {
            Some(s) => s.apply(x),
            None => x.clone(),
        })
        .collect();

    let mut ybar = vec![0.0; d];
    for y in &ys {
        axpy(&mut ybar, 1.0 / n as f64, y);
    }
    let mut xbar = vec![0.0; q];
    for x in &xs {
        axpy(&mut xbar, 1.0 / n as f64, x);
    }

    let mut xtx = SymMatrix::zeros(q);
    for x in &xs {
        let c = sub(x, &xbar);
        for i in 0..q {
            for j in i..q {
                let v = xtx.get(i, j) + c[i] * c[j];
                xtx.set(i, j, v);
                xtx.set(j, i, v);
            }
        }
    }
    let mut xty = vec![vec![0.0; q]; d];
    for (x, y) in xs.iter().zip(&ys) {
        let c = sub(x, &xbar);
        for j in 0..d {
            let dy = y[j] - ybar[j];
            for (t, ci) in xty[j].iter_mut().zip(&c) {
                *t += ci * dy;
            }
        }
    }

    let mut active = vec![true; q];
    let mut alphas = vec![0.0; q];
    let mut tau = 1.0;
    let mut columns: Vec<Vec<f64>> = vec![vec![0.0; d]; q];
    let mut intercept = vec![0.0; d];
    let mut first = true;

    for _ in 0..cfg.max_iter {
        // ridge solve for the active columns given (tau, alpha)
        let act: Vec<usize> = (0..q).filter(|&i| active[i]).collect();
        if act.is_empty() {
            break;
        }
        let m = act.len();
        let mut sys = SymMatrix::zeros(m);
        for (a, &ia) in act.iter().enumerate() {
            for (b, &ib) in act.iter().enumerate().skip(a) {
                sys.set(a, b, tau * xtx.get(ia, ib));
                sys.set(b, a, tau * xtx.get(ia, ib));
            }
            let diag = sys.get(a, a) + alphas[ia];
            sys.set(a, a, diag);
        }
        let chol = Cholesky::new(&sys)?;
        let mut new_cols = vec![vec![0.0; d]; q];
        for j in 0..d {
            let rhs: Vec<f64> = act.iter().map(|&ia| tau * xty[j][ia]).collect();
            let beta = chol.solve(&rhs);
            for (a, &ia) in act.iter().enumerate() {
                new_cols[ia][j] = beta[a];
            }
        }
        // intercept decouples once covariates are centered
        let mut new_intercept = ybar.clone();
        for (ia, col) in new_cols.iter().enumerate() {
            axpy(&mut new_intercept, -xbar[ia], col);
        }

        // closed-form tau at the current slopes
        let sq: f64 = xs
            .iter()
            .zip(&ys)
            .map(|(x, y)| {
                let mut pred = new_intercept.clone();
                for (xi, col) in x.iter().zip(&new_cols) {
                    axpy(&mut pred, *xi, col);
                }
                let r = sub(y, &pred);
                dot(&r, &r)
            })
            .sum();
        let new_tau = if sq > 0.0 {
            ((n * d) as f64 / sq).min(1e12)
        } else {
            1e12
        };

        // alpha update and guarded pruning on the active columns
        let mut new_alphas = alphas.clone();
        for &ia in &act {
            new_alphas[ia] =
                (n as f64 / dot(&new_cols[ia], &new_cols[ia]).max(ALPHA_EPS)).min(cfg.alpha_cap);
        }
        let max_norm = act
            .iter()
            .map(|&ia| norm(&new_cols[ia]))
            .fold(0.0f64, f64::max);
        let mut candidates: Vec<usize> = act
            .iter()
            .copied()
            .filter(|&ia| {
                new_alphas[ia] >= cfg.prune_threshold
                    || norm(&new_cols[ia]) <= PRUNE_NORM_RATIO * max_norm
            })
            .collect();
        if candidates.len() == act.len() && !candidates.is_empty() {
            let keep = candidates
                .iter()
                .copied()
                .max_by(|&a, &b| norm(&new_cols[a]).partial_cmp(&norm(&new_cols[b])).unwrap())
                .unwrap();
            candidates.retain(|&i| i != keep);
        }
        for ia in candidates {
            // zeroing a column must not reduce the posterior objective
            let gain = 0.5 * new_alphas[ia] * dot(&new_cols[ia], &new_cols[ia]);
            let mut loss = 0.0;
            for (x, y) in xs.iter().zip(&ys) {
                let mut pred = new_intercept.clone();
                for (xi, col) in x.iter().zip(&new_cols) {
                    axpy(&mut pred, *xi, col);
                }
                let r_with = sub(y, &pred);
                axpy(&mut pred, -x[ia], &new_cols[ia]);
                let r_without = sub(y, &pred);
                loss += 0.5 * new_tau * (dot(&r_without, &r_without) - dot(&r_with, &r_with));
            }
            if gain >= loss {
                new_cols[ia] = vec![0.0; d];
                active[ia] = false;
            }
        }

        let delta = {
            let mut dmax: f64 = 0.0;
            for (a, b) in columns.iter().zip(&new_cols) {
                dmax = dmax.max(norm(&sub(a, b)));
            }
            dmax = dmax.max(norm(&sub(&intercept, &new_intercept)));
            dmax.max((tau - new_tau).abs() / new_tau.max(1.0))
        };
        columns = new_cols;
        intercept = new_intercept;
        tau = new_tau;
        alphas = new_alphas;
        if !first && delta < cfg.tol {
            break;
        }
        first = false;
    }

    // back to raw covariate units
    let (intercept, columns) = match &standardization {
        Some(s) => {
            let mut cols_raw = Vec::with_capacity(q);
            let mut icpt = intercept.clone();
            for (i, col) in columns.iter().enumerate() {
                let scaled: Vec<f64> = col.iter().map(|c| c / s.stds[i]).collect();
                axpy(&mut icpt, -s.means[i], &scaled);
                cols_raw.push(scaled);
            }
            (icpt, cols_raw)
        }
        None => (intercept, columns),
    };
    Ok(LinearModel {
        intercept,
        slope_columns: columns,
        precision: tau,
        alphas,
    })
}

/// Mean plus the top-r eigenpairs of the sample covariance.
pub fn fit_pca(points: &[Vec<f64>], r: usize) -> Result<PrincipalBasis> {
    if points.len() < 2 {
        return Err(GeomError::Validation("PCA needs at least 2 points".into()));
    }
    let d = points[0].len();
    if points.iter().any(|p| p.len() != d) {
        return Err(GeomError::Validation(
            "PCA points must share a dimension".into(),
        ));
    }
    if r > d {
        return Err(GeomError::Validation(format!(
            "requested {r} components from dimension {d}"
        )));
    }
    let (mean, cov) = SymMatrix::covariance(points);
    let (vals, vecs) = crate::linalg::jacobi_eigh(&cov);
    Ok(PrincipalBasis {
        base: mean,
        directions: vecs.into_iter().take(r).collect(),
        variances: vals.into_iter().take(r).map(|v| v.max(0.0)).collect(),
    })
}

/// Tangent-space PGA: Frechet mean, then PCA of the log-mapped points inside
/// the tangent space. Coincides with plain PCA on Euclidean data.
pub fn fit_tangent_pga(points: &[ManifoldPoint], r: usize) -> Result<PrincipalBasis> {
    if points.is_empty() {
        return Err(GeomError::Validation("PGA needs points".into()));
    }
    let mean = frechet_mean(points, FRECHET_TOL, FRECHET_MAX_ITER)?;
    let logs: Vec<Vec<f64>> = points
        .iter()
        .map(|p| Ok(log_map(&mean, p)?.components().to_vec()))
        .collect::<Result<_>>()?;
    let mut basis = fit_pca(&logs, r)?;
    // center the tangent cloud at the mean itself, not at its own average
    basis.base = mean.coords().to_vec();
    // directions live in the tangent space at the mean
    basis.directions = basis
        .directions
        .iter()
        .map(|dir| {
            Ok(crate::manifold::project_tangent(&mean, dir)?
                .components()
                .to_vec())
        })
        .collect::<Result<_>>()?;
    Ok(basis)
}

/// Tangent vectors of the PGA basis at its mean (for plotting/consumers that
/// need typed tangents).
pub fn pga_tangents(basis: &PrincipalBasis, mean: &ManifoldPoint) -> Result<Vec<TangentVector>> {
    basis
        .directions
        .iter()
        .map(|d| TangentVector::new(mean.clone(), d.clone()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regression::Record;

    fn e_dataset(xs: &[f64], ys: &[Vec<f64>]) -> Dataset {
        let d = ys[0].len();
        let m = ManifoldKind::euclidean(d).unwrap();
        let records = xs
            .iter()
            .zip(ys)
            .map(|(x, y)| Record {
                covariates: vec![*x],
                response: ManifoldPoint::new(m, y.clone()).unwrap(),
            })
            .collect();
        Dataset::new(m, 1, records).unwrap()
    }

    #[test]
    fn ols_recovers_exact_line() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys: Vec<Vec<f64>> = xs.iter().map(|x| vec![1.0 + 2.0 * x, -x]).collect();
        let m = fit_ols(&e_dataset(&xs, &ys)).unwrap();
        assert!((m.intercept[0] - 1.0).abs() < 1e-12);
        assert!((m.intercept[1]).abs() < 1e-12);
        assert!((m.slope_columns[0][0] - 2.0).abs() < 1e-12);
        assert!((m.slope_columns[0][1] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn ols_rejects_constant_covariate() {
        let xs = [2.0, 2.0, 2.0];
        let ys: Vec<Vec<f64>> = vec![vec![1.0], vec![2.0], vec![3.0]];
        assert!(matches!(
            fit_ols(&e_dataset(&xs, &ys)),
            Err(GeomError::SingularDesign)
        ));
    }

    #[test]
    fn pca_finds_line_direction() {
        let points: Vec<Vec<f64>> = (-5..=5).map(|i| vec![i as f64, 2.0 * i as f64]).collect();
        let basis = fit_pca(&points, 2).unwrap();
        let d0 = &basis.directions[0];
        let along = (d0[1] / d0[0] - 2.0).abs();
        assert!(along < 1e-12);
        assert!(basis.variances[1] < 1e-12);
        assert!(fit_pca(&points, 3).is_err());
    }

    #[test]
    fn pca_full_reconstruction_is_lossless() {
        let points = vec![
            vec![1.0, 2.0, 0.5],
            vec![-1.0, 0.3, 2.0],
            vec![0.7, -0.9, 1.1],
            vec![0.2, 0.4, -0.8],
        ];
        let basis = fit_pca(&points, 3).unwrap();
        for p in &points {
            let centered = sub(p, &basis.base);
            let mut rec = basis.base.clone();
            for dir in &basis.directions {
                axpy(&mut rec, dot(&centered, dir), dir);
            }
            for (a, b) in rec.iter().zip(p) {
                assert!((a - b).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn pca_directions_invariant_under_translation() {
        let points = vec![
            vec![0.1, 1.0, -0.4],
            vec![0.9, -0.2, 0.8],
            vec![-0.5, 0.6, 0.3],
            vec![0.4, 0.4, -0.9],
            vec![1.2, -0.8, 0.1],
        ];
        let shifted: Vec<Vec<f64>> = points
            .iter()
            .map(|p| vec![p[0] + 10.0, p[1] - 3.0, p[2] + 0.5])
            .collect();
        let a = fit_pca(&points, 3).unwrap();
        let b = fit_pca(&shifted, 3).unwrap();
        for (da, db) in a.directions.iter().zip(&b.directions) {
            assert!((dot(da, db).abs() - 1.0).abs() < 1e-10);
        }
        for (va, vb) in a.variances.iter().zip(&b.variances) {
            assert!((va - vb).abs() < 1e-10);
        }
    }

    #[test]
    fn tangent_pga_on_geodesic_sphere_data() {
        // noiseless points along one geodesic: the first mode dominates
        let s2 = ManifoldKind::sphere(3).unwrap();
        let mu = ManifoldPoint::new(s2, vec![1.0, 0.0, 0.0]).unwrap();
        let v = TangentVector::new(mu.clone(), vec![0.0, 0.5, 0.25]).unwrap();
        let points: Vec<ManifoldPoint> = (0..20)
            .map(|i| {
                let t = (i as f64 / 19.0) - 0.5;
                crate::manifold::exp_map(&mu, &v.scaled(t)).unwrap()
            })
            .collect();
        let basis = fit_tangent_pga(&points, 2).unwrap();
        assert!(
            basis.variances[0] > 100.0 * basis.variances[1].max(1e-30),
            "variances {:?}",
            basis.variances
        );
        // returned directions are tangent at the mean
        let mean = ManifoldPoint::new(s2, basis.base.clone()).unwrap();
        for dir in &basis.directions {
            assert!(dot(mean.coords(), dir).abs() < 1e-10);
        }
    }

    #[test]
    fn tangent_pga_equals_pca_on_euclidean() {
        let m = ManifoldKind::euclidean(2).unwrap();
        let raw = vec![
            vec![0.0, 0.0],
            vec![1.0, 1.0],
            vec![2.0, 1.5],
            vec![3.0, 3.2],
        ];
        let pts: Vec<ManifoldPoint> = raw
            .iter()
            .map(|c| ManifoldPoint::new(m, c.clone()).unwrap())
            .collect();
        let pga = fit_tangent_pga(&pts, 2).unwrap();
        let pca = fit_pca(&raw, 2).unwrap();
        for (a, b) in pga.variances.iter().zip(&pca.variances) {
            assert!((a - b).abs() < 1e-12);
        }
        for (da, db) in pga.directions.iter().zip(&pca.directions) {
            let align = dot(da, db).abs();
            assert!((align - 1.0).abs() < 1e-10);
        }
    }
}
