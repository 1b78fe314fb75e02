//! Geodesic regression with an automatic-relevance-determination prior.
//!
//! The model predicts exp(mu, sum_i x_i v_i) for a base point mu and q
//! tangent columns v_i; a per-column Gaussian prior with precisions alpha_i,
//! re-estimated as alpha_i = N/|v_i|^2, drives irrelevant columns to zero so
//! they can be pruned.

use crate::error::{GeomError, Result};
use crate::exec;
use crate::linalg::{axpy, Cholesky, SymMatrix};
use crate::manifold::{
    dexp_base_adjoint, dexp_velocity_adjoint, exp_map, log_map, parallel_transport,
    project_tangent, ManifoldKind, ManifoldPoint, TangentVector,
};
use crate::stats::{
    dtau_ln_normalizing_constant, frechet_mean, ln_normalizing_constant, squared_residual_sum,
    QuadratureConfig, FRECHET_MAX_ITER, FRECHET_TOL,
};

/// Divisor floor in the alpha update.
pub const ALPHA_EPS: f64 = 1e-12;
/// Columns with norm below this fraction of the largest column also prune.
pub const PRUNE_NORM_RATIO: f64 = 1e-6;
const BACKTRACK_FACTOR: f64 = 0.5;
const MAX_HALVINGS: usize = 30;
/// ln tau ceiling keeping exp(ln tau) finite.
const LN_TAU_MAX: f64 = 690.0;

/// One observation: covariate vector paired with a manifold response.
#[derive(Debug, Clone)]
pub struct Record {
    pub covariates: Vec<f64>,
    pub response: ManifoldPoint,
}

/// Paired covariate/response records on a declared manifold.
#[derive(Debug, Clone)]
pub struct Dataset {
    manifold: ManifoldKind,
    q: usize,
    records: Vec<Record>,
}

impl Dataset {
    pub fn new(manifold: ManifoldKind, q: usize, records: Vec<Record>) -> Result<Self> {
        for (i, rec) in records.iter().enumerate() {
            if rec.covariates.len() != q {
                return Err(GeomError::Validation(format!(
                    "record {i}: covariate length {} != q = {q}",
                    rec.covariates.len()
                )));
            }
            if rec.covariates.iter().any(|x| !x.is_finite()) {
                return Err(GeomError::Validation(format!(
                    "record {i}: non-finite covariate"
                )));
            }
            if rec.response.manifold() != manifold {
                return Err(GeomError::ManifoldMismatch);
            }
        }
        Ok(Self {
            manifold,
            q,
            records,
        })
    }

    pub fn manifold(&self) -> ManifoldKind {
        self.manifold
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn record(&self, i: usize) -> &Record {
        &self.records[i]
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn responses(&self) -> Vec<ManifoldPoint> {
        self.records.iter().map(|r| r.response.clone()).collect()
    }

    /// Same responses, covariates replaced by `xs` (used by permutation
    /// tests).
    pub fn with_covariates(&self, xs: &[Vec<f64>]) -> Result<Self> {
        if xs.len() != self.len() {
            return Err(GeomError::Validation(
                "covariate replacement length mismatch".into(),
            ));
        }
        let records = self
            .records
            .iter()
            .zip(xs)
            .map(|(r, x)| Record {
                covariates: x.clone(),
                response: r.response.clone(),
            })
            .collect();
        Self::new(self.manifold, xs.first().map_or(self.q, Vec::len), records)
    }
}

/// Per-coordinate affine covariate normalization kept inside the model and
/// inverse-applied at predict time.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardization {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

impl Standardization {
    pub fn fit(records: &[Record], q: usize) -> Self {
        let n = records.len() as f64;
        let mut means = vec![0.0; q];
        for r in records {
            axpy(&mut means, 1.0 / n, &r.covariates);
        }
        let mut vars = vec![0.0; q];
        for r in records {
            for (v, (x, m)) in vars.iter_mut().zip(r.covariates.iter().zip(&means)) {
                *v += (x - m) * (x - m) / n;
            }
        }
        let stds = vars
            .iter()
            .map(|v| {
                let s = v.sqrt();
                if s > 1e-12 {
                    s
                } else {
                    1.0
                }
            })
            .collect();
        Self { means, stds }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.means.iter().zip(&self.stds))
            .map(|(xi, (m, s))| (xi - m) / s)
            .collect()
    }
}

/// The regression state: base point, tangent columns, noise precision, ARD
/// precisions, and the active-column mask. Inactive columns hold exact zero
/// vectors and never reactivate.
#[derive(Debug, Clone)]
pub struct GeodesicModel {
    mu: ManifoldPoint,
    columns: Vec<TangentVector>,
    tau: f64,
    alphas: Vec<f64>,
    active: Vec<bool>,
    standardization: Option<Standardization>,
}

impl GeodesicModel {
    pub fn new(
        mu: ManifoldPoint,
        columns: Vec<TangentVector>,
        tau: f64,
        alphas: Vec<f64>,
        active: Vec<bool>,
        standardization: Option<Standardization>,
    ) -> Result<Self> {
        let q = columns.len();
        if alphas.len() != q || active.len() != q {
            return Err(GeomError::Validation(
                "columns, alphas, and active mask must have equal length".into(),
            ));
        }
        for col in &columns {
            if col.base() != &mu {
                return Err(GeomError::BaseMismatch);
            }
        }
        if !tau.is_finite() || tau <= 0.0 {
            return Err(GeomError::Validation("tau must be positive".into()));
        }
        if alphas.iter().any(|a| !a.is_finite() || *a < 0.0) {
            return Err(GeomError::Validation(
                "alphas must be finite and non-negative".into(),
            ));
        }
        for (i, (col, act)) in columns.iter().zip(&active).enumerate() {
            if !act && col.norm() != 0.0 {
                return Err(GeomError::Invariant(format!(
                    "inactive column {i} must be exactly zero"
                )));
            }
        }
        if let Some(s) = &standardization {
            if s.means.len() != q || s.stds.len() != q {
                return Err(GeomError::Validation(
                    "standardization parameter length mismatch".into(),
                ));
            }
        }
        Ok(Self {
            mu,
            columns,
            tau,
            alphas,
            active,
            standardization,
        })
    }

    /// All-active model with no prior and no standardization.
    pub fn with_columns(mu: ManifoldPoint, columns: Vec<TangentVector>, tau: f64) -> Result<Self> {
        let q = columns.len();
        Self::new(mu, columns, tau, vec![0.0; q], vec![true; q], None)
    }

    pub fn manifold(&self) -> ManifoldKind {
        self.mu.manifold()
    }

    pub fn mu(&self) -> &ManifoldPoint {
        &self.mu
    }

    pub fn columns(&self) -> &[TangentVector] {
        &self.columns
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn active(&self) -> &[bool] {
        &self.active
    }

    pub fn active_count(&self) -> usize {
        self.active.iter().filter(|a| **a).count()
    }

    pub fn q(&self) -> usize {
        self.columns.len()
    }

    pub fn standardization(&self) -> Option<&Standardization> {
        self.standardization.as_ref()
    }

    pub fn effective_covariates(&self, x: &[f64]) -> Vec<f64> {
        match &self.standardization {
            Some(s) => s.apply(x),
            None => x.to_vec(),
        }
    }

    /// Combined velocity sum_i x_i v_i over active columns, in the tangent
    /// space at mu. `x` is in raw covariate units.
    pub fn velocity(&self, x: &[f64]) -> Result<TangentVector> {
        if x.len() != self.q() {
            return Err(GeomError::DimensionMismatch {
                expected: self.q(),
                got: x.len(),
            });
        }
        let xe = self.effective_covariates(x);
        let mut w = vec![0.0; self.mu.dim()];
        for ((xi, col), act) in xe.iter().zip(&self.columns).zip(&self.active) {
            if *act {
                axpy(&mut w, *xi, col.components());
            }
        }
        project_tangent(&self.mu, &w)
    }

    /// exp(mu, sum_i x_i v_i); a combined velocity reaching the cut locus is
    /// a domain error.
    pub fn predict(&self, x: &[f64]) -> Result<ManifoldPoint> {
        let w = self.velocity(x)?;
        if self.manifold().is_spherical() && w.norm() >= std::f64::consts::PI {
            return Err(GeomError::CutLocus { norm: w.norm() });
        }
        exp_map(&self.mu, &w)
    }

    fn replace(
        &self,
        mu: ManifoldPoint,
        columns: Vec<TangentVector>,
        tau: f64,
        alphas: Vec<f64>,
        active: Vec<bool>,
    ) -> Result<Self> {
        Self::new(
            mu,
            columns,
            tau,
            alphas,
            active,
            self.standardization.clone(),
        )
    }
}

/// Optimization mode: plain likelihood, fixed-weight regularization, or the
/// ARD-prior model with column pruning.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FitMode {
    Geodesic,
    Regularized { gamma: f64 },
    Bgrm,
}

#[derive(Debug, Clone)]
pub struct FitConfig {
    pub step_mu: f64,
    pub step_v: f64,
    pub step_tau: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub alpha_cap: f64,
    pub prune_threshold: f64,
    pub covariate_standardization: bool,
    pub seed: u64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            step_mu: 0.1,
            step_v: 0.1,
            step_tau: 0.01,
            tol: 1e-9,
            max_iter: 500,
            alpha_cap: 1e8,
            prune_threshold: 1e6,
            covariate_standardization: true,
            seed: 0,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.tol.is_finite() || self.tol <= 0.0 {
            return Err(GeomError::Validation("tol must be > 0".into()));
        }
        if self.max_iter < 1 {
            return Err(GeomError::Validation("max_iter must be >= 1".into()));
        }
        if self.alpha_cap <= self.prune_threshold {
            return Err(GeomError::Validation(
                "alpha_cap must exceed prune_threshold".into(),
            ));
        }
        if [self.step_mu, self.step_v, self.step_tau]
            .iter()
            .any(|s| !s.is_finite() || *s <= 0.0)
        {
            return Err(GeomError::Validation("step sizes must be > 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct FitReport {
    pub energy_trace: Vec<f64>,
    pub iterations: usize,
    pub pruned_columns: Vec<usize>,
    pub converged: bool,
}

/// Free-standing prediction wrapper.
pub fn predict(model: &GeodesicModel, x: &[f64]) -> Result<ManifoldPoint> {
    model.predict(x)
}

/// The posterior/regularized objective in ascent form. With the prior:
/// -N ln C(tau) - (tau/2) sum d^2 - sum_i (alpha_i/2)|v_i|^2 (constant
/// dropped). Without: -(1/2) sum d^2 - (gamma/2) sum |v_i|^2.
pub fn energy(
    model: &GeodesicModel,
    data: &Dataset,
    use_prior: bool,
    gamma: f64,
    quad: QuadratureConfig,
) -> Result<f64> {
    if model.manifold() != data.manifold() {
        return Err(GeomError::ManifoldMismatch);
    }
    let sq = squared_residual_sum(model, data)?;
    let col_sq: f64 = model.columns.iter().map(|c| c.norm().powi(2)).sum();
    if use_prior {
        let lnc = ln_normalizing_constant(model.manifold(), model.tau, quad)?;
        let prior: f64 = model
            .columns
            .iter()
            .zip(&model.alphas)
            .map(|(c, a)| 0.5 * a * c.norm().powi(2))
            .sum();
        Ok(-(data.len() as f64) * lnc - 0.5 * model.tau * sq - prior)
    } else {
        Ok(-0.5 * sq - 0.5 * gamma * col_sq)
    }
}

/// Per-record residual data shared by the gradient assemblies: the combined
/// velocity w_n, the prediction, and log(prediction, y_n).
fn residual_logs(
    model: &GeodesicModel,
    data: &Dataset,
) -> Result<Vec<(TangentVector, TangentVector)>> {
    exec::try_map_indexed(data.len(), |i| {
        let rec = data.record(i);
        let w = model.velocity(&rec.covariates)?;
        if model.manifold().is_spherical() && w.norm() >= std::f64::consts::PI {
            return Err(GeomError::CutLocus { norm: w.norm() });
        }
        let pred = exp_map(&model.mu, &w)?;
        let res = log_map(&pred, &rec.response).map_err(|e| match e {
            GeomError::Antipodal => GeomError::CutLocusAtRecord { record: i },
            other => other,
        })?;
        Ok((w, res))
    })
}

/// Ascent gradient of the prior-form energy with respect to the base point,
/// as a tangent vector at mu.
pub fn grad_mu(
    model: &GeodesicModel,
    data: &Dataset,
    _quad: QuadratureConfig,
) -> Result<TangentVector> {
    let parts = residual_logs(model, data)?;
    let adjointed: Vec<TangentVector> = exec::try_map_indexed(data.len(), |i| {
        let (w, res) = &parts[i];
        dexp_base_adjoint(&model.mu, w, res)
    })?;
    let dim = model.mu.dim();
    let acc = exec::accumulate_vec(data.len(), dim, |i, buf| {
        axpy(buf, model.tau, adjointed[i].components());
    });
    project_tangent(&model.mu, &acc)
}

/// Ascent gradient with respect to each tangent column; inactive columns
/// receive exact zeros.
pub fn grad_v(
    model: &GeodesicModel,
    data: &Dataset,
    _quad: QuadratureConfig,
) -> Result<Vec<TangentVector>> {
    let parts = residual_logs(model, data)?;
    let adjointed: Vec<TangentVector> = exec::try_map_indexed(data.len(), |i| {
        let (w, res) = &parts[i];
        dexp_velocity_adjoint(&model.mu, w, res)
    })?;
    let q = model.q();
    let dim = model.mu.dim();
    let flat = exec::accumulate_vec(data.len(), q * dim, |i, buf| {
        let xe = model.effective_covariates(&data.record(i).covariates);
        for (k, xk) in xe.iter().enumerate() {
            if model.active[k] {
                axpy(
                    &mut buf[k * dim..(k + 1) * dim],
                    model.tau * xk,
                    adjointed[i].components(),
                );
            }
        }
    });
    let mut grads = Vec::with_capacity(q);
    for k in 0..q {
        if !model.active[k] {
            grads.push(TangentVector::zero(model.mu.clone()));
            continue;
        }
        let mut g = flat[k * dim..(k + 1) * dim].to_vec();
        axpy(&mut g, -model.alphas[k], model.columns[k].components());
        grads.push(project_tangent(&model.mu, &g)?);
    }
    Ok(grads)
}

/// Ascent gradient with respect to tau: -N C'(tau)/C(tau) - (1/2) sum d^2.
pub fn grad_tau(model: &GeodesicModel, data: &Dataset, quad: QuadratureConfig) -> Result<f64> {
    if !model.tau.is_finite() || model.tau <= 0.0 {
        return Err(GeomError::Validation("tau must be > 0".into()));
    }
    let ratio = dtau_ln_normalizing_constant(model.manifold(), model.tau, quad)?;
    let sq = squared_residual_sum(model, data)?;
    Ok(-(data.len() as f64) * ratio - 0.5 * sq)
}

/// The ARD re-estimation rule alpha_i = min(N / max(|v_i|^2, eps), cap),
/// applied to every column.
pub fn update_alphas(model: &GeodesicModel, n: usize, cfg: &FitConfig) -> Vec<f64> {
    model
        .columns
        .iter()
        .map(|c| (n as f64 / c.norm().powi(2).max(ALPHA_EPS)).min(cfg.alpha_cap))
        .collect()
}

/// Deactivates and zeroes every active column whose alpha reached the prune
/// threshold or whose norm fell below 1e-6 of the largest column. If every
/// active column qualifies, the largest-norm column is retained.
pub fn prune(model: &GeodesicModel, cfg: &FitConfig) -> GeodesicModel {
    let candidates = prune_candidates(model, cfg);
    let mut out = model.clone();
    for idx in candidates {
        out.columns[idx] = TangentVector::zero(out.mu.clone());
        out.active[idx] = false;
    }
    out
}

fn prune_candidates(model: &GeodesicModel, cfg: &FitConfig) -> Vec<usize> {
    let max_norm = model
        .columns
        .iter()
        .zip(&model.active)
        .filter(|(_, a)| **a)
        .map(|(c, _)| c.norm())
        .fold(0.0f64, f64::max);
    let mut candidates: Vec<usize> = (0..model.q())
        .filter(|&i| {
            model.active[i]
                && (model.alphas[i] >= cfg.prune_threshold
                    || model.columns[i].norm() <= PRUNE_NORM_RATIO * max_norm)
        })
        .collect();
    if candidates.len() == model.active_count() && !candidates.is_empty() {
        // a regression with no slope columns cannot represent the model
        // class, so the largest-norm column always survives
        let keep = candidates
            .iter()
            .copied()
            .max_by(|&a, &b| {
                model.columns[a]
                    .norm()
                    .partial_cmp(&model.columns[b].norm())
                    .unwrap()
            })
            .unwrap();
        candidates.retain(|&i| i != keep);
    }
    candidates
}

struct Optimizer<'a> {
    data: &'a Dataset,
    mode: FitMode,
    cfg: &'a FitConfig,
    quad: QuadratureConfig,
    model: GeodesicModel,
    energy: f64,
    step_mu: f64,
    step_v: f64,
    step_tau: f64,
    pruned: Vec<usize>,
}

impl<'a> Optimizer<'a> {
    /// Traced objective. Geodesic: the log-likelihood. Regularized: the
    /// likelihood with a tau-coupled ridge term (gamma = alpha/tau). Bgrm:
    /// the posterior plus the prior's log-normalization (N/2) sum ln alpha_i,
    /// under which the alpha update is exact coordinate ascent.
    fn objective_of(&self, model: &GeodesicModel) -> Result<f64> {
        let n = self.data.len() as f64;
        let lnc = ln_normalizing_constant(model.manifold(), model.tau, self.quad)?;
        let sq = squared_residual_sum(model, self.data)?;
        let lnlik = -n * lnc - 0.5 * model.tau * sq;
        match self.mode {
            FitMode::Geodesic => Ok(lnlik),
            FitMode::Regularized { gamma } => {
                let col_sq: f64 = model.columns.iter().map(|c| c.norm().powi(2)).sum();
                Ok(lnlik - 0.5 * gamma * model.tau * col_sq)
            }
            FitMode::Bgrm => {
                let mut prior = 0.0;
                for (c, a) in model.columns.iter().zip(&model.alphas) {
                    prior += -0.5 * a * c.norm().powi(2) + 0.5 * n * a.ln();
                }
                Ok(lnlik + prior)
            }
        }
    }

    /// Gradient alphas: what the prior contributes to the V gradient in the
    /// current mode.
    fn gradient_alphas(&self) -> Vec<f64> {
        match self.mode {
            FitMode::Geodesic => vec![0.0; self.model.q()],
            FitMode::Regularized { gamma } => vec![gamma * self.model.tau; self.model.q()],
            FitMode::Bgrm => self.model.alphas.clone(),
        }
    }

    /// Backtracking line search over candidate models produced by `make`.
    /// Accepts the first candidate whose objective does not decrease;
    /// candidates that error (cut locus and the like) just halve the step.
    /// Returns the accepted scale, or None when no scale improved.
    fn line_search<F>(&mut self, start: f64, make: F) -> Option<f64>
    where
        F: Fn(&Self, f64) -> Result<GeodesicModel>,
    {
        let mut s = start;
        for _ in 0..=MAX_HALVINGS {
            if let Ok(candidate) = make(self, s) {
                if let Ok(e) = self.objective_of(&candidate) {
                    if e >= self.energy {
                        self.model = candidate;
                        self.energy = e;
                        return Some(s);
                    }
                }
            }
            s *= BACKTRACK_FACTOR;
        }
        None
    }

    /// Doubles the remembered step on success, halves it on a fully failed
    /// search; the remembered step never exceeds the configured initial one.
    fn adapt(step: &mut f64, accepted: Option<f64>, initial: f64) {
        match accepted {
            Some(s) => *step = (2.0 * s).min(initial),
            None => *step = (*step * BACKTRACK_FACTOR).max(1e-300),
        }
    }

    fn step_mu(&mut self) -> Result<()> {
        let g = grad_mu(&self.model, self.data, self.quad)?;
        if g.norm() < 1e-300 {
            return Ok(());
        }
        let start = self.step_mu;
        let accepted = self.line_search(start, |opt, s| {
            let move_vec = g.scaled(s);
            let new_mu = exp_map(&opt.model.mu, &move_vec)?;
            let mut new_cols = Vec::with_capacity(opt.model.q());
            for (col, act) in opt.model.columns.iter().zip(&opt.model.active) {
                if *act {
                    new_cols.push(parallel_transport(&opt.model.mu, &move_vec, col)?);
                } else {
                    new_cols.push(TangentVector::zero(new_mu.clone()));
                }
            }
            opt.model.replace(
                new_mu,
                new_cols,
                opt.model.tau,
                opt.model.alphas.clone(),
                opt.model.active.clone(),
            )
        });
        Self::adapt(&mut self.step_mu, accepted, self.cfg.step_mu);
        Ok(())
    }

    fn step_v(&mut self) -> Result<()> {
        let mut model_for_grad = self.model.clone();
        model_for_grad.alphas = self.gradient_alphas();
        let grads = grad_v(&model_for_grad, self.data, self.quad)?;
        let total: f64 = grads.iter().map(|g| g.norm().powi(2)).sum();
        if total.sqrt() < 1e-300 {
            return Ok(());
        }
        let start = self.step_v;
        let accepted = self.line_search(start, |opt, s| {
            let mut new_cols = Vec::with_capacity(opt.model.q());
            for (k, (col, act)) in opt.model.columns.iter().zip(&opt.model.active).enumerate() {
                if *act {
                    let mut raw = col.components().to_vec();
                    axpy(&mut raw, s, grads[k].components());
                    new_cols.push(project_tangent(&opt.model.mu, &raw)?);
                } else {
                    new_cols.push(TangentVector::zero(opt.model.mu.clone()));
                }
            }
            opt.model.replace(
                opt.model.mu.clone(),
                new_cols,
                opt.model.tau,
                opt.model.alphas.clone(),
                opt.model.active.clone(),
            )
        });
        Self::adapt(&mut self.step_v, accepted, self.cfg.step_v);
        Ok(())
    }

    fn step_tau(&mut self) -> Result<()> {
        let gt = match self.mode {
            FitMode::Regularized { gamma } => {
                let base = grad_tau(&self.model, self.data, self.quad)?;
                let col_sq: f64 = self.model.columns.iter().map(|c| c.norm().powi(2)).sum();
                base - 0.5 * gamma * col_sq
            }
            _ => grad_tau(&self.model, self.data, self.quad)?,
        };
        // ascend in ln tau; d/d(ln tau) = tau * d/d(tau)
        let g_ln = self.model.tau * gt;
        if g_ln.abs() < 1e-300 {
            return Ok(());
        }
        let start = self.step_tau;
        let accepted = self.line_search(start, |opt, s| {
            let ln_new = (opt.model.tau.ln() + s * g_ln).min(LN_TAU_MAX);
            opt.model.replace(
                opt.model.mu.clone(),
                opt.model.columns.clone(),
                ln_new.exp(),
                opt.model.alphas.clone(),
                opt.model.active.clone(),
            )
        });
        Self::adapt(&mut self.step_tau, accepted, self.cfg.step_tau);
        Ok(())
    }

    /// alpha <- min(N/|v_i|^2, cap) on active columns maximizes the traced
    /// objective coordinate-wise, so the trace cannot decrease here.
    fn refresh_alphas(&mut self) -> Result<()> {
        let fresh = update_alphas(&self.model, self.data.len(), self.cfg);
        for (i, a) in fresh.into_iter().enumerate() {
            if self.model.active[i] {
                self.model.alphas[i] = a;
            }
        }
        self.energy = self.objective_of(&self.model)?;
        Ok(())
    }

    /// Energy-guarded pruning: a candidate column is zeroed only when doing
    /// so does not decrease the traced objective (its alpha stays frozen).
    /// A rejected candidate re-qualifies on a later iteration once smaller.
    fn prune_guarded(&mut self) -> Result<()> {
        for idx in prune_candidates(&self.model, self.cfg) {
            let mut tentative = self.model.clone();
            tentative.columns[idx] = TangentVector::zero(tentative.mu.clone());
            tentative.active[idx] = false;
            if let Ok(e) = self.objective_of(&tentative) {
                if e >= self.energy {
                    self.model = tentative;
                    self.energy = e;
                    self.pruned.push(idx);
                }
            }
        }
        Ok(())
    }
}

/// Fits a geodesic regression by gradient ascent with backtracking; see
/// [`FitMode`] for the three objectives. The returned energy trace is
/// non-decreasing.
pub fn fit(
    data: &Dataset,
    q: usize,
    mode: FitMode,
    cfg: &FitConfig,
    quad: QuadratureConfig,
) -> Result<(GeodesicModel, FitReport)> {
    let init = initial_model(data, q, mode, cfg)?;
    fit_from(data, mode, cfg, quad, init)
}

/// Fits starting from an existing model (its standardization frame wins).
pub fn fit_with_init(
    data: &Dataset,
    mode: FitMode,
    cfg: &FitConfig,
    quad: QuadratureConfig,
    init: &GeodesicModel,
) -> Result<(GeodesicModel, FitReport)> {
    validate_fit_inputs(data, init.q())?;
    cfg.validate()?;
    if init.manifold() != data.manifold() {
        return Err(GeomError::ManifoldMismatch);
    }
    let mut model = init.clone();
    if mode == FitMode::Bgrm {
        let fresh = update_alphas(&model, data.len(), cfg);
        for (i, a) in fresh.into_iter().enumerate() {
            if model.active[i] {
                model.alphas[i] = a;
            }
        }
    }
    fit_from(data, mode, cfg, quad, model)
}

fn validate_fit_inputs(data: &Dataset, q: usize) -> Result<()> {
    if data.len() < 2 {
        return Err(GeomError::Validation("fit needs at least 2 records".into()));
    }
    if q == 0 {
        return Err(GeomError::Validation("fit needs q >= 1".into()));
    }
    if data.q() != q {
        return Err(GeomError::Validation(format!(
            "q = {q} does not match the dataset's covariate width {}",
            data.q()
        )));
    }
    Ok(())
}

fn fit_from(
    data: &Dataset,
    mode: FitMode,
    cfg: &FitConfig,
    quad: QuadratureConfig,
    init: GeodesicModel,
) -> Result<(GeodesicModel, FitReport)> {
    cfg.validate()?;
    let mut opt = Optimizer {
        data,
        mode,
        cfg,
        quad,
        model: init,
        energy: f64::NEG_INFINITY,
        step_mu: cfg.step_mu,
        step_v: cfg.step_v,
        step_tau: cfg.step_tau,
        pruned: Vec::new(),
    };
    opt.energy = opt.objective_of(&opt.model)?;
    let mut trace = vec![opt.energy];
    let mut converged = false;
    let mut iterations = 0;
    for _ in 0..cfg.max_iter {
        iterations += 1;
        let before = opt.energy;
        opt.step_mu()?;
        opt.step_v()?;
        if mode == FitMode::Bgrm {
            opt.refresh_alphas()?;
            opt.prune_guarded()?;
        }
        opt.step_tau()?;
        trace.push(opt.energy);
        if opt.energy - before < cfg.tol {
            converged = true;
            break;
        }
    }
    let mut model = opt.model;
    if let FitMode::Regularized { gamma } = mode {
        model.alphas = vec![gamma * model.tau; model.q()];
    }
    Ok((
        model,
        FitReport {
            energy_trace: trace,
            iterations,
            pruned_columns: opt.pruned,
            converged,
        },
    ))
}

/// Initialization: Frechet mean base point, tangent-space least-squares
/// columns, and tau from the mean squared residual per intrinsic coordinate.
fn initial_model(
    data: &Dataset,
    q: usize,
    mode: FitMode,
    cfg: &FitConfig,
) -> Result<GeodesicModel> {
    validate_fit_inputs(data, q)?;
    cfg.validate()?;
    let standardization = if cfg.covariate_standardization {
        Some(Standardization::fit(data.records(), q))
    } else {
        None
    };
    let responses = data.responses();
    let mu = frechet_mean(&responses, FRECHET_TOL, FRECHET_MAX_ITER)?;
    let dim = mu.dim();
    let n = data.len();

    let xs: Vec<Vec<f64>> = data
        .records()
        .iter()
        .map(|r| match &standardization {
            Some(s) => s.apply(&r.covariates),
            None => r.covariates.clone(),
        })
        .collect();
    let logs: Vec<TangentVector> = data
        .records()
        .iter()
        .map(|r| log_map(&mu, &r.response))
        .collect::<Result<_>>()?;

    // ridge-regularized normal equations, shared across ambient coordinates
    let mut xtx = SymMatrix::zeros(q);
    for x in &xs {
        for i in 0..q {
            for j in i..q {
                let v = xtx.get(i, j) + x[i] * x[j];
                xtx.set(i, j, v);
                xtx.set(j, i, v);
            }
        }
    }
    let ridge = 1e-8 * (0..q).map(|i| xtx.get(i, i)).fold(1.0f64, f64::max);
    for i in 0..q {
        xtx.set(i, i, xtx.get(i, i) + ridge);
    }
    let chol = Cholesky::new(&xtx)?;
    let mut cols_raw = vec![vec![0.0; dim]; q];
    #[allow(clippy::needless_range_loop)]
    for j in 0..dim {
        let mut rhs = vec![0.0; q];
        for (x, z) in xs.iter().zip(&logs) {
            for (r, xi) in rhs.iter_mut().zip(x) {
                *r += xi * z.components()[j];
            }
        }
        let beta = chol.solve(&rhs);
        for (k, b) in beta.into_iter().enumerate() {
            cols_raw[k][j] = b;
        }
    }
    let mut columns: Vec<TangentVector> = cols_raw
        .iter()
        .map(|c| project_tangent(&mu, c))
        .collect::<Result<_>>()?;

    // shrink a wild initialization until every combined velocity is valid
    let alphas0 = vec![0.0; q];
    let active0 = vec![true; q];
    let mut model = GeodesicModel::new(
        mu.clone(),
        columns.clone(),
        1.0,
        alphas0.clone(),
        active0.clone(),
        standardization.clone(),
    )?;
    for _ in 0..60 {
        if squared_residual_sum(&model, data).is_ok() {
            break;
        }
        columns = columns.iter().map(|c| c.scaled(0.5)).collect();
        model = GeodesicModel::new(
            mu.clone(),
            columns.clone(),
            1.0,
            alphas0.clone(),
            active0.clone(),
            standardization.clone(),
        )?;
    }

    let sq = squared_residual_sum(&model, data)?;
    let intrinsic = data.manifold().intrinsic_dim() as f64;
    let tau0 = if sq > 0.0 {
        ((n as f64) * intrinsic / sq).min(1e8)
    } else {
        1e8
    };

    let alphas = match mode {
        FitMode::Bgrm => update_alphas(&model, n, cfg),
        FitMode::Regularized { gamma } => vec![gamma * tau0; q],
        FitMode::Geodesic => vec![0.0; q],
    };
    GeodesicModel::new(mu, columns, tau0, alphas, active0, standardization)
}

/// Chebyshev features T_1..T_width of the covariate affinely mapped from
/// [lo, hi] onto [-1, 1]; used to widen a scalar covariate into a
/// well-conditioned polynomial basis.
pub fn chebyshev_features(x: f64, lo: f64, hi: f64, width: usize) -> Vec<f64> {
    let span = (hi - lo).max(1e-12);
    let t = 2.0 * (x - lo) / span - 1.0;
    let mut out = Vec::with_capacity(width);
    let mut prev = 1.0;
    let mut cur = t;
    for _ in 0..width {
        out.push(cur);
        let next = 2.0 * t * cur - prev;
        prev = cur;
        cur = next;
    }
    out
}

/// Expands a single-covariate dataset into `width` Chebyshev features of the
/// observed covariate range. Returns the expanded dataset and the (lo, hi)
/// map so later covariates can be expanded identically.
pub fn expand_chebyshev(data: &Dataset, width: usize) -> Result<(Dataset, (f64, f64))> {
    if data.q() != 1 {
        return Err(GeomError::Validation(
            "Chebyshev expansion applies to a single covariate".into(),
        ));
    }
    if width < 1 {
        return Err(GeomError::Validation("expansion width must be >= 1".into()));
    }
    let lo = data
        .records()
        .iter()
        .map(|r| r.covariates[0])
        .fold(f64::INFINITY, f64::min);
    let hi = data
        .records()
        .iter()
        .map(|r| r.covariates[0])
        .fold(f64::NEG_INFINITY, f64::max);
    let records = data
        .records()
        .iter()
        .map(|r| Record {
            covariates: chebyshev_features(r.covariates[0], lo, hi, width),
            response: r.response.clone(),
        })
        .collect();
    Ok((Dataset::new(data.manifold(), width, records)?, (lo, hi)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s2() -> ManifoldKind {
        ManifoldKind::sphere(3).unwrap()
    }

    fn simple_model() -> GeodesicModel {
        let mu = ManifoldPoint::new(s2(), vec![1.0, 0.0, 0.0]).unwrap();
        let v1 = TangentVector::new(mu.clone(), vec![0.0, 0.4, 0.0]).unwrap();
        let v2 = TangentVector::new(mu.clone(), vec![0.0, 0.0, 0.2]).unwrap();
        GeodesicModel::with_columns(mu, vec![v1, v2], 50.0).unwrap()
    }

    #[test]
    fn predict_at_zero_is_mu() {
        let m = simple_model();
        let p = m.predict(&[0.0, 0.0]).unwrap();
        assert_eq!(p, *m.mu());
    }

    #[test]
    fn predict_single_column_matches_exp_map() {
        let m = simple_model();
        let p = m.predict(&[1.0, 0.0]).unwrap();
        let q = exp_map(m.mu(), &m.columns()[0]).unwrap();
        assert!(crate::manifold::distance(&p, &q).unwrap() < 1e-15);
    }

    #[test]
    fn predict_rejects_cut_locus_velocity() {
        let mu = ManifoldPoint::new(s2(), vec![1.0, 0.0, 0.0]).unwrap();
        let v = TangentVector::new(mu.clone(), vec![0.0, 2.0, 0.0]).unwrap();
        let m = GeodesicModel::with_columns(mu, vec![v], 1.0).unwrap();
        assert!(matches!(m.predict(&[2.0]), Err(GeomError::CutLocus { .. })));
    }

    #[test]
    fn euclidean_predict_is_linear() {
        let e2 = ManifoldKind::euclidean(2).unwrap();
        let mu = ManifoldPoint::new(e2, vec![1.0, -1.0]).unwrap();
        let v = TangentVector::new(mu.clone(), vec![2.0, 3.0]).unwrap();
        let m = GeodesicModel::with_columns(mu, vec![v], 1.0).unwrap();
        let p = m.predict(&[2.0]).unwrap();
        assert_eq!(p.coords(), &[5.0, 5.0]);
    }

    #[test]
    fn alpha_update_rule() {
        let mu = ManifoldPoint::new(s2(), vec![1.0, 0.0, 0.0]).unwrap();
        let unit = TangentVector::new(mu.clone(), vec![0.0, 1.0, 0.0]).unwrap();
        let zero = TangentVector::zero(mu.clone());
        let root_n = TangentVector::new(mu.clone(), vec![0.0, 10.0, 0.0]).unwrap();
        let m = GeodesicModel::new(
            mu,
            vec![unit, zero, root_n],
            1.0,
            vec![0.0; 3],
            vec![true; 3],
            None,
        )
        .unwrap();
        let cfg = FitConfig::default();
        let a = update_alphas(&m, 100, &cfg);
        assert_eq!(a[0], 100.0);
        assert_eq!(a[1], cfg.alpha_cap);
        assert_eq!(a[2], 1.0);
    }

    #[test]
    fn prune_threshold_rule() {
        let mu = ManifoldPoint::new(s2(), vec![1.0, 0.0, 0.0]).unwrap();
        let big = TangentVector::new(mu.clone(), vec![0.0, 0.5, 0.0]).unwrap();
        let small = TangentVector::new(mu.clone(), vec![0.0, 0.0, 1e-3]).unwrap();
        let m = GeodesicModel::new(
            mu,
            vec![big, small],
            1.0,
            vec![10.0, 1e9],
            vec![true, true],
            None,
        )
        .unwrap();
        let cfg = FitConfig::default();
        let pruned = prune(&m, &cfg);
        assert!(pruned.active()[0]);
        assert!(!pruned.active()[1]);
        assert_eq!(pruned.columns()[1].norm(), 0.0);

        // all alphas small: unchanged
        let m2 = GeodesicModel::new(
            pruned.mu().clone(),
            pruned.columns().to_vec(),
            1.0,
            vec![10.0, 10.0],
            pruned.active().to_vec(),
            None,
        )
        .unwrap();
        let again = prune(&m2, &cfg);
        assert_eq!(again.active(), m2.active());
    }

    #[test]
    fn prune_retains_largest_when_all_qualify() {
        let mu = ManifoldPoint::new(s2(), vec![1.0, 0.0, 0.0]).unwrap();
        let a = TangentVector::new(mu.clone(), vec![0.0, 0.3, 0.0]).unwrap();
        let b = TangentVector::new(mu.clone(), vec![0.0, 0.0, 0.1]).unwrap();
        let m = GeodesicModel::new(mu, vec![a, b], 1.0, vec![1e9, 1e9], vec![true, true], None)
            .unwrap();
        let pruned = prune(&m, &FitConfig::default());
        assert!(pruned.active()[0]);
        assert!(!pruned.active()[1]);
    }

    #[test]
    fn chebyshev_features_recurrence() {
        let f = chebyshev_features(0.5, -1.0, 1.0, 4);
        // T_1..T_4 at t = 0.5
        assert!((f[0] - 0.5).abs() < 1e-15);
        assert!((f[1] - (-0.5)).abs() < 1e-15);
        assert!((f[2] - (-1.0)).abs() < 1e-15);
        assert!((f[3] - (-0.5)).abs() < 1e-15);
    }

    #[test]
    fn fit_rejects_bad_inputs() {
        let e1 = ManifoldKind::euclidean(1).unwrap();
        let rec = |x: f64, y: f64| Record {
            covariates: vec![x],
            response: ManifoldPoint::new(e1, vec![y]).unwrap(),
        };
        let tiny = Dataset::new(e1, 1, vec![rec(0.0, 0.0)]).unwrap();
        let cfg = FitConfig::default();
        assert!(fit(
            &tiny,
            1,
            FitMode::Geodesic,
            &cfg,
            QuadratureConfig::default()
        )
        .is_err());
        let ok = Dataset::new(e1, 1, vec![rec(0.0, 0.0), rec(1.0, 1.0)]).unwrap();
        assert!(fit(&ok, 0, FitMode::Geodesic, &cfg, QuadratureConfig::default()).is_err());
        assert!(fit(&ok, 2, FitMode::Geodesic, &cfg, QuadratureConfig::default()).is_err());
    }
}
