//! Text file formats: datasets, landmark shape sets, model documents,
//! fit reports, and evaluation tables. Everything round-trips losslessly
//! (floats are written with 17 significant digits) and parse errors cite
//! the offending line.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use geomreg_core::manifold::{ManifoldKind, ManifoldPoint, TangentVector};
use geomreg_core::regression::{Dataset, FitReport, GeodesicModel, Record, Standardization};
use geomreg_core::shape::{LandmarkShape, ShapeSet};

use crate::error::CliError;

pub const DATASET_TAG: &str = "# geomreg dataset v1";
pub const SHAPES_TAG: &str = "# geomreg shapes v1";
pub const MODEL_TAG: &str = "# geomreg model v1";
pub const REPORT_TAG: &str = "# geomreg report v1";
pub const PREDICTIONS_TAG: &str = "# geomreg predictions v1";
pub const EVAL_TAG: &str = "# geomreg eval v1";

/// 17 significant digits: enough for exact f64 round-trips.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn fmt_row(values: impl IntoIterator<Item = f64>) -> String {
    let mut out = String::new();
    for (i, v) in values.into_iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        let _ = write!(out, "{}", fmt_f64(v));
    }
    out
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_file(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

struct LineParser<'a> {
    path: PathBuf,
    lines: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> LineParser<'a> {
    fn new(path: &Path, text: &'a str) -> Self {
        Self {
            path: path.to_path_buf(),
            lines: text.lines().enumerate(),
        }
    }

    fn error(&self, line: usize, message: impl Into<String>) -> CliError {
        CliError::Parse {
            path: self.path.clone(),
            line: line + 1,
            message: message.into(),
        }
    }

    fn next_line(&mut self) -> Result<(usize, &'a str), CliError> {
        self.lines
            .next()
            .ok_or_else(|| self.error(usize::MAX - 1, "unexpected end of file"))
    }

    /// Reads `key <rest>` and returns the rest; names the field on mismatch.
    fn keyed(&mut self, key: &str) -> Result<(usize, &'a str), CliError> {
        let (n, line) = self.next_line()?;
        match line.strip_prefix(key) {
            Some(rest) if rest.is_empty() || rest.starts_with(' ') => Ok((n, rest.trim_start())),
            _ => Err(self.error(n, format!("expected field `{key}`, found `{line}`"))),
        }
    }

    fn keyed_usize(&mut self, key: &str) -> Result<usize, CliError> {
        let (n, rest) = self.keyed(key)?;
        rest.trim()
            .parse()
            .map_err(|_| self.error(n, format!("field `{key}`: invalid integer `{rest}`")))
    }

    fn keyed_f64(&mut self, key: &str) -> Result<f64, CliError> {
        let (n, rest) = self.keyed(key)?;
        rest.trim()
            .parse()
            .map_err(|_| self.error(n, format!("field `{key}`: invalid number `{rest}`")))
    }

    fn floats(&self, n: usize, text: &str, expected: usize) -> Result<Vec<f64>, CliError> {
        let vals: Result<Vec<f64>, _> = text.split_whitespace().map(str::parse).collect();
        let vals = vals.map_err(|_| self.error(n, "invalid number in record"))?;
        if vals.len() != expected {
            return Err(self.error(
                n,
                format!("expected {expected} values, found {}", vals.len()),
            ));
        }
        Ok(vals)
    }
}

fn manifold_line(manifold: ManifoldKind) -> String {
    match manifold {
        ManifoldKind::Euclidean { dim } => format!("manifold euclidean {dim}"),
        ManifoldKind::Sphere { ambient_dim } => format!("manifold sphere {ambient_dim}"),
        ManifoldKind::PreshapeSphere { landmarks } => format!("manifold preshape {landmarks}"),
    }
}

fn parse_manifold(p: &LineParser, n: usize, rest: &str) -> Result<ManifoldKind, CliError> {
    let mut parts = rest.split_whitespace();
    let kind = parts.next().unwrap_or("");
    let size: usize = parts
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| p.error(n, "field `manifold`: missing size"))?;
    let manifold = match kind {
        "euclidean" => ManifoldKind::euclidean(size),
        "sphere" => ManifoldKind::sphere(size),
        "preshape" => ManifoldKind::preshape(size),
        other => {
            return Err(p.error(n, format!("field `manifold`: unknown kind `{other}`")));
        }
    };
    manifold.map_err(|e| p.error(n, format!("field `manifold`: {e}")))
}

/// Detects the format of a data-bearing file by its header tag.
pub fn sniff_tag(path: &Path) -> Result<String, CliError> {
    let text = read_file(path)?;
    Ok(text.lines().next().unwrap_or("").to_string())
}

// --- dataset files ----------------------------------------------------

pub fn dataset_to_string(data: &Dataset, covariate_names: &[String], tag: &str) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{tag}");
    let _ = writeln!(out, "{}", manifold_line(data.manifold()));
    let _ = writeln!(out, "q {}", data.q());
    let _ = writeln!(out, "covariates {}", covariate_names.join(" "));
    let _ = writeln!(out, "records {}", data.len());
    for rec in data.records() {
        let row = rec.covariates.iter().chain(rec.response.coords()).copied();
        let _ = writeln!(out, "{}", fmt_row(row));
    }
    out
}

pub fn parse_dataset(path: &Path, text: &str) -> Result<(Dataset, Vec<String>), CliError> {
    let mut p = LineParser::new(path, text);
    let (n, tag) = p.next_line()?;
    if tag != DATASET_TAG && tag != PREDICTIONS_TAG {
        return Err(p.error(n, format!("expected `{DATASET_TAG}`, found `{tag}`")));
    }
    let (n, rest) = p.keyed("manifold")?;
    let manifold = parse_manifold(&p, n, rest)?;
    let q = p.keyed_usize("q")?;
    let (_, names_raw) = p.keyed("covariates")?;
    let names: Vec<String> = names_raw.split_whitespace().map(String::from).collect();
    let count = p.keyed_usize("records")?;
    let dim = manifold.ambient_dim();
    let mut records = Vec::with_capacity(count);
    for _ in 0..count {
        let (n, line) = p.next_line()?;
        let vals = p.floats(n, line, q + dim)?;
        let response = ManifoldPoint::new(manifold, vals[q..].to_vec())
            .map_err(|e| p.error(n, format!("record: {e}")))?;
        records.push(Record {
            covariates: vals[..q].to_vec(),
            response,
        });
    }
    let data =
        Dataset::new(manifold, q, records).map_err(|e| p.error(0, format!("dataset: {e}")))?;
    Ok((data, names))
}

// --- shape files -------------------------------------------------------

pub fn shapes_to_string(set: &ShapeSet) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{SHAPES_TAG}");
    let _ = writeln!(out, "landmarks {}", set.k());
    let _ = writeln!(out, "q {}", set.shapes[0].covariate.len());
    let _ = writeln!(out, "covariates {}", set.covariate_names.join(" "));
    let _ = writeln!(out, "records {}", set.shapes.len());
    for shape in &set.shapes {
        let row = shape
            .covariate
            .iter()
            .copied()
            .chain(shape.points.iter().flat_map(|p| [p[0], p[1]]));
        let _ = writeln!(out, "{}", fmt_row(row));
    }
    out
}

pub fn parse_shapes(path: &Path, text: &str) -> Result<ShapeSet, CliError> {
    let mut p = LineParser::new(path, text);
    let (n, tag) = p.next_line()?;
    if tag != SHAPES_TAG {
        return Err(p.error(n, format!("expected `{SHAPES_TAG}`, found `{tag}`")));
    }
    let k = p.keyed_usize("landmarks")?;
    let q = p.keyed_usize("q")?;
    let (_, names_raw) = p.keyed("covariates")?;
    let names: Vec<String> = names_raw.split_whitespace().map(String::from).collect();
    let count = p.keyed_usize("records")?;
    let mut shapes = Vec::with_capacity(count);
    for _ in 0..count {
        let (n, line) = p.next_line()?;
        let vals = p.floats(n, line, q + 2 * k)?;
        let points: Vec<[f64; 2]> = vals[q..].chunks_exact(2).map(|c| [c[0], c[1]]).collect();
        let shape = LandmarkShape::new(points, vals[..q].to_vec())
            .map_err(|e| p.error(n, format!("shape record: {e}")))?;
        shapes.push(shape);
    }
    ShapeSet::new(shapes, names).map_err(|e| p.error(0, format!("shape set: {e}")))
}

// --- model documents ---------------------------------------------------

/// Chebyshev covariate expansion recorded alongside the model so new
/// covariates can be expanded identically at predict time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Expansion {
    pub lo: f64,
    pub hi: f64,
    pub width: usize,
}

#[derive(Debug, Clone)]
pub struct ModelDocument {
    pub model: GeodesicModel,
    pub expansion: Option<Expansion>,
}

pub fn model_to_string(doc: &ModelDocument) -> String {
    let model = &doc.model;
    let mut out = String::new();
    let _ = writeln!(out, "{MODEL_TAG}");
    let _ = writeln!(out, "{}", manifold_line(model.manifold()));
    let _ = writeln!(out, "q {}", model.q());
    let _ = writeln!(out, "tau {}", fmt_f64(model.tau()));
    match model.standardization() {
        Some(s) => {
            let _ = writeln!(out, "standardize on");
            let _ = writeln!(out, "x_mean {}", fmt_row(s.means.iter().copied()));
            let _ = writeln!(out, "x_std {}", fmt_row(s.stds.iter().copied()));
        }
        None => {
            let _ = writeln!(out, "standardize off");
        }
    }
    match doc.expansion {
        Some(e) => {
            let _ = writeln!(
                out,
                "expand chebyshev {} {} {}",
                fmt_f64(e.lo),
                fmt_f64(e.hi),
                e.width
            );
        }
        None => {
            let _ = writeln!(out, "expand none");
        }
    }
    let _ = writeln!(out, "mu {}", fmt_row(model.mu().coords().iter().copied()));
    let _ = writeln!(out, "alpha {}", fmt_row(model.alphas().iter().copied()));
    let _ = writeln!(
        out,
        "active {}",
        model
            .active()
            .iter()
            .map(|a| if *a { "1" } else { "0" })
            .collect::<Vec<_>>()
            .join(" ")
    );
    for (i, col) in model.columns().iter().enumerate() {
        let _ = writeln!(
            out,
            "column {i} {}",
            fmt_row(col.components().iter().copied())
        );
    }
    out
}

pub fn parse_model(path: &Path, text: &str) -> Result<ModelDocument, CliError> {
    let mut p = LineParser::new(path, text);
    let (n, tag) = p.next_line()?;
    if tag != MODEL_TAG {
        return Err(p.error(n, format!("expected `{MODEL_TAG}`, found `{tag}`")));
    }
    let (n, rest) = p.keyed("manifold")?;
    let manifold = parse_manifold(&p, n, rest)?;
    let q = p.keyed_usize("q")?;
    let tau = p.keyed_f64("tau")?;
    let (n, std_mode) = p.keyed("standardize")?;
    let standardization = match std_mode.trim() {
        "on" => {
            let (n, means_raw) = p.keyed("x_mean")?;
            let means = p.floats(n, means_raw, q)?;
            let (n, stds_raw) = p.keyed("x_std")?;
            let stds = p.floats(n, stds_raw, q)?;
            Some(Standardization { means, stds })
        }
        "off" => None,
        other => {
            return Err(p.error(
                n,
                format!("field `standardize`: expected on/off, got `{other}`"),
            ));
        }
    };
    let (n, expand_raw) = p.keyed("expand")?;
    let expansion = {
        let mut parts = expand_raw.split_whitespace();
        match parts.next() {
            Some("none") => None,
            Some("chebyshev") => {
                let lo: f64 = parts
                    .next()
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| p.error(n, "field `expand`: bad lo"))?;
                let hi: f64 = parts
                    .next()
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| p.error(n, "field `expand`: bad hi"))?;
                let width: usize = parts
                    .next()
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| p.error(n, "field `expand`: bad width"))?;
                Some(Expansion { lo, hi, width })
            }
            other => {
                return Err(p.error(
                    n,
                    format!("field `expand`: unknown kind `{}`", other.unwrap_or("")),
                ));
            }
        }
    };
    let dim = manifold.ambient_dim();
    let (n, mu_raw) = p.keyed("mu")?;
    let mu = ManifoldPoint::new(manifold, p.floats(n, mu_raw, dim)?)
        .map_err(|e| p.error(n, format!("field `mu`: {e}")))?;
    let (n, alpha_raw) = p.keyed("alpha")?;
    let alphas = p.floats(n, alpha_raw, q)?;
    let (n, active_raw) = p.keyed("active")?;
    let active: Vec<bool> = active_raw
        .split_whitespace()
        .map(|t| match t {
            "1" => Ok(true),
            "0" => Ok(false),
            _ => Err(p.error(n, "field `active`: expected 0/1 flags")),
        })
        .collect::<Result<_, _>>()?;
    if active.len() != q {
        return Err(p.error(n, format!("field `active`: expected {q} flags")));
    }
    let mut columns = Vec::with_capacity(q);
    for i in 0..q {
        let (n, rest) = p.keyed("column")?;
        let mut parts = rest.splitn(2, ' ');
        let idx: usize = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| p.error(n, "field `column`: missing index"))?;
        if idx != i {
            return Err(p.error(
                n,
                format!("field `column`: expected index {i}, found {idx}"),
            ));
        }
        let comps = p.floats(n, parts.next().unwrap_or(""), dim)?;
        let col = TangentVector::new(mu.clone(), comps)
            .map_err(|e| p.error(n, format!("column {i}: {e}")))?;
        columns.push(col);
    }
    let model = GeodesicModel::new(mu, columns, tau, alphas, active, standardization)
        .map_err(|e| p.error(0, format!("model: {e}")))?;
    Ok(ModelDocument { model, expansion })
}

// --- fit reports ---------------------------------------------------------

pub fn report_to_string(report: &FitReport, wall_time_ms: u128) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{REPORT_TAG}");
    let _ = writeln!(out, "converged {}", report.converged);
    let _ = writeln!(out, "iterations {}", report.iterations);
    let _ = writeln!(
        out,
        "pruned {}",
        report
            .pruned_columns
            .iter()
            .map(|i| i.to_string())
            .collect::<Vec<_>>()
            .join(" ")
    );
    let _ = writeln!(out, "wall_time_ms {wall_time_ms}");
    for (i, e) in report.energy_trace.iter().enumerate() {
        let _ = writeln!(out, "energy {i} {}", fmt_f64(*e));
    }
    out
}

pub fn parse_report(path: &Path, text: &str) -> Result<FitReport, CliError> {
    let mut p = LineParser::new(path, text);
    let (n, tag) = p.next_line()?;
    if tag != REPORT_TAG {
        return Err(p.error(n, format!("expected `{REPORT_TAG}`, found `{tag}`")));
    }
    let (n, conv) = p.keyed("converged")?;
    let converged = conv
        .trim()
        .parse()
        .map_err(|_| p.error(n, "field `converged`: expected true/false"))?;
    let iterations = p.keyed_usize("iterations")?;
    let (n, pruned_raw) = p.keyed("pruned")?;
    let pruned_columns: Vec<usize> = pruned_raw
        .split_whitespace()
        .map(|t| {
            t.parse()
                .map_err(|_| p.error(n, "field `pruned`: invalid index"))
        })
        .collect::<Result<_, _>>()?;
    let _ = p.keyed_usize("wall_time_ms")?;
    let mut energy_trace = Vec::new();
    while let Ok((n, rest)) = p.keyed("energy") {
        let mut parts = rest.split_whitespace();
        let _idx = parts.next();
        let v: f64 = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| p.error(n, "field `energy`: invalid value"))?;
        energy_trace.push(v);
    }
    Ok(FitReport {
        energy_trace,
        iterations,
        pruned_columns,
        converged,
    })
}
