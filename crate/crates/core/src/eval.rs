//! Model-quality statistics: geodesic R^2, permutation p-values, and
//! comparison tables.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::baselines::LinearModel;
use crate::error::{GeomError, Result};
use crate::exec;
use crate::linalg::{dot, sub};
use crate::manifold::distance;
use crate::regression::{fit, Dataset, FitConfig, FitMode, GeodesicModel};
use crate::stats::{ambient_mean, frechet_mean, QuadratureConfig, FRECHET_MAX_ITER, FRECHET_TOL};

/// R^2 with the raw (unclamped) value alongside the [0, 1]-clamped one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RSquared {
    pub value: f64,
    pub raw: f64,
}

/// One comparison row; `ambient_euclidean` flags baselines evaluated with
/// Euclidean residuals in the embedding space.
#[derive(Debug, Clone)]
pub struct ModelRow {
    pub name: String,
    pub r_squared: f64,
    pub raw_r_squared: f64,
    pub ambient_euclidean: bool,
}

#[derive(Debug, Clone)]
pub struct EvalReport {
    pub r_squared: f64,
    pub p_value: Option<f64>,
    pub rows: Vec<ModelRow>,
    pub residual_mean: f64,
    pub residual_max: f64,
}

/// 1 - (unexplained variation)/(total variation) with geodesic distances and
/// the Frechet mean. Errors when the responses carry no variation.
pub fn r_squared(model: &GeodesicModel, data: &Dataset) -> Result<RSquared> {
    if data.is_empty() {
        return Err(GeomError::Validation("R^2 of an empty dataset".into()));
    }
    if model.manifold() != data.manifold() {
        return Err(GeomError::ManifoldMismatch);
    }
    let mean = frechet_mean(&data.responses(), FRECHET_TOL, FRECHET_MAX_ITER)?;
    let unexplained = exec::try_map_indexed(data.len(), |i| {
        let rec = data.record(i);
        let pred = model.predict(&rec.covariates)?;
        Ok(distance(&rec.response, &pred)?.powi(2))
    })?;
    let total = exec::try_map_indexed(data.len(), |i| {
        Ok::<f64, GeomError>(distance(&data.record(i).response, &mean)?.powi(2))
    })?;
    let u: f64 = exec::sum_indexed(unexplained.len(), |i| unexplained[i]);
    let t: f64 = exec::sum_indexed(total.len(), |i| total[i]);
    if t <= 0.0 {
        return Err(GeomError::Validation(
            "total variation is zero: all responses coincide".into(),
        ));
    }
    let raw = 1.0 - u / t;
    Ok(RSquared {
        value: raw.clamp(0.0, 1.0),
        raw,
    })
}

/// Classical R^2 of a Euclidean linear model evaluated in the ambient
/// embedding (responses treated as plain vectors).
pub fn r_squared_linear_ambient(model: &LinearModel, data: &Dataset) -> Result<RSquared> {
    if data.is_empty() {
        return Err(GeomError::Validation("R^2 of an empty dataset".into()));
    }
    let mean = ambient_mean(&data.responses());
    let mut unexplained = 0.0;
    let mut total = 0.0;
    for rec in data.records() {
        let pred = model.predict(&rec.covariates);
        let ru = sub(rec.response.coords(), &pred);
        unexplained += dot(&ru, &ru);
        let rt = sub(rec.response.coords(), &mean);
        total += dot(&rt, &rt);
    }
    if total <= 0.0 {
        return Err(GeomError::Validation(
            "total variation is zero: all responses coincide".into(),
        ));
    }
    let raw = 1.0 - unexplained / total;
    Ok(RSquared {
        value: raw.clamp(0.0, 1.0),
        raw,
    })
}

/// Add-one smoothed permutation p-value from an observed statistic and its
/// permutation replicates.
pub fn smoothed_pvalue(observed: f64, replicates: &[f64]) -> f64 {
    let exceed = replicates.iter().filter(|r| **r >= observed).count();
    (1.0 + exceed as f64) / (1.0 + replicates.len() as f64)
}

/// Permutation significance test on R^2: refits the model on `n_perm`
/// covariate-shuffled copies of the data and reports the add-one smoothed
/// exceedance probability. Replicates run independently (in parallel when
/// enabled) with per-replicate seeds derived from `seed`.
pub fn permutation_pvalue(
    data: &Dataset,
    q: usize,
    mode: FitMode,
    cfg: &FitConfig,
    n_perm: usize,
    seed: u64,
    quad: QuadratureConfig,
) -> Result<f64> {
    if n_perm < 100 {
        return Err(GeomError::Validation(
            "permutation test needs n_perm >= 100".into(),
        ));
    }
    let (model, _) = fit(data, q, mode, cfg, quad)?;
    let observed = r_squared(&model, data)?.raw;
    let base_covariates: Vec<Vec<f64>> = data
        .records()
        .iter()
        .map(|r| r.covariates.clone())
        .collect();
    let replicates: Vec<f64> = exec::try_map_indexed(n_perm, |rep| {
        let mut rng = ChaCha8Rng::seed_from_u64(replicate_seed(seed, rep as u64));
        let mut xs = base_covariates.clone();
        xs.shuffle(&mut rng);
        let shuffled = data.with_covariates(&xs)?;
        let (m, _) = fit(&shuffled, q, mode, cfg, quad)?;
        Ok::<f64, GeomError>(r_squared(&m, &shuffled)?.raw)
    })?;
    Ok(smoothed_pvalue(observed, &replicates))
}

fn replicate_seed(seed: u64, rep: u64) -> u64 {
    // splitmix64 step keyed by the replicate index
    let mut z = seed
        .wrapping_add(rep.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A model under comparison.
pub enum ModelRef<'a> {
    Geodesic(&'a GeodesicModel),
    Linear(&'a LinearModel),
}

/// One row per model, ordered as given; the report's headline R^2 and
/// residual summary come from the first row's model.
pub fn compare_models(data: &Dataset, models: &[(String, ModelRef<'_>)]) -> Result<EvalReport> {
    if models.is_empty() {
        return Err(GeomError::Validation("no models to compare".into()));
    }
    let mut rows = Vec::with_capacity(models.len());
    for (name, model) in models {
        let (rs, ambient) = match model {
            ModelRef::Geodesic(m) => (r_squared(m, data)?, false),
            ModelRef::Linear(m) => (r_squared_linear_ambient(m, data)?, true),
        };
        rows.push(ModelRow {
            name: name.clone(),
            r_squared: rs.value,
            raw_r_squared: rs.raw,
            ambient_euclidean: ambient,
        });
    }
    let (residual_mean, residual_max) = match &models[0].1 {
        ModelRef::Geodesic(m) => {
            let mut sum = 0.0;
            let mut max: f64 = 0.0;
            for rec in data.records() {
                let d = distance(&rec.response, &m.predict(&rec.covariates)?)?;
                sum += d;
                max = max.max(d);
            }
            (sum / data.len() as f64, max)
        }
        ModelRef::Linear(m) => {
            let mut sum = 0.0;
            let mut max: f64 = 0.0;
            for rec in data.records() {
                let r = sub(rec.response.coords(), &m.predict(&rec.covariates));
                let d = dot(&r, &r).sqrt();
                sum += d;
                max = max.max(d);
            }
            (sum / data.len() as f64, max)
        }
    };
    Ok(EvalReport {
        r_squared: rows[0].r_squared,
        p_value: None,
        rows,
        residual_mean,
        residual_max,
    })
}
