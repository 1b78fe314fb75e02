//! Implementations of the five subcommands. Each takes a typed argument
//! struct so the integration tests can drive them directly as well as
//! through the binary.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use geomreg_core::baselines::fit_ols;
use geomreg_core::eval::{permutation_pvalue, r_squared, r_squared_linear_ambient};
use geomreg_core::manifold::{project_tangent, ManifoldKind, ManifoldPoint, TangentVector};
use geomreg_core::regression::{
    chebyshev_features, expand_chebyshev, fit, fit_with_init, Dataset, FitConfig, FitMode,
    GeodesicModel, Record,
};
use geomreg_core::shape::{
    from_preshape, generate_pentagons, generate_sphere_dataset, procrustes_align, LandmarkShape,
    ShapeSet,
};
use geomreg_core::stats::QuadratureConfig;
use geomreg_core::GeomError;

use crate::error::CliError;
use crate::formats::{
    self, dataset_to_string, model_to_string, parse_dataset, parse_model, parse_report,
    parse_shapes, read_file, report_to_string, shapes_to_string, write_file, Expansion,
    ModelDocument, DATASET_TAG, PREDICTIONS_TAG, SHAPES_TAG,
};
use crate::plot::{ramp, Frame, Svg, HEIGHT, WIDTH};

/// Reference sphere experiment embedded as a preset: base point, two tangent
/// columns (the second an order of magnitude below the noise floor), and
/// precision 100. Covariates are drawn uniformly on [0, 4].
pub const SPHERE_PRESET_MU: [f64; 3] = [0.7704, 0.4155, 0.4836];
pub const SPHERE_PRESET_V1: [f64; 3] = [0.0755, -0.2771, -0.2784];
pub const SPHERE_PRESET_V2: [f64; 3] = [-0.0002, 0.0007, 0.0100];
pub const SPHERE_PRESET_TAU: f64 = 100.0;
pub const SPHERE_PRESET_N: usize = 293;
pub const SPHERE_PRESET_X_SCALE: f64 = 4.0;

pub struct SimulateArgs {
    pub generator: String,
    pub output: PathBuf,
    pub truth_output: Option<PathBuf>,
    pub n: Option<usize>,
    pub seed: u64,
    pub noise: f64,
    pub deform: f64,
    pub tau: f64,
    pub manifold: Option<String>,
    pub dim: usize,
    pub k: usize,
    pub q: usize,
}

/// The preset ground truth as a model (columns projected onto the tangent
/// space at the normalized base point).
pub fn sphere_preset_truth() -> Result<GeodesicModel, GeomError> {
    let s2 = ManifoldKind::sphere(3)?;
    let mu = ManifoldPoint::project(s2, &SPHERE_PRESET_MU)?;
    let v1 = project_tangent(&mu, &SPHERE_PRESET_V1)?;
    let v2 = project_tangent(&mu, &SPHERE_PRESET_V2)?;
    GeodesicModel::with_columns(mu, vec![v1, v2], SPHERE_PRESET_TAU)
}

pub fn sphere_preset_dataset(n: usize, seed: u64) -> Result<Dataset, GeomError> {
    let truth = sphere_preset_truth()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let records = (0..n)
        .map(|_| {
            let x: Vec<f64> = (0..2)
                .map(|_| SPHERE_PRESET_X_SCALE * rng.random::<f64>())
                .collect();
            let center = truth.predict(&x)?;
            let response = geomreg_core::stats::sample(
                &geomreg_core::stats::RiemannianNormal::new(center, SPHERE_PRESET_TAU)?,
                &mut rng,
            )?;
            Ok(Record {
                covariates: x,
                response,
            })
        })
        .collect::<Result<Vec<_>, GeomError>>()?;
    Dataset::new(truth.manifold(), 2, records)
}

fn write_truth(path: &Path, model: &GeodesicModel) -> Result<(), CliError> {
    let doc = ModelDocument {
        model: model.clone(),
        expansion: None,
    };
    write_file(path, &model_to_string(&doc))
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<(), CliError> {
    ensure_writable(&args.output)?;
    if let Some(truth) = &args.truth_output {
        ensure_writable(truth)?;
    }
    match args.generator.as_str() {
        "sphere-table1" => {
            let n = args.n.unwrap_or(SPHERE_PRESET_N);
            let truth = sphere_preset_truth().map_err(CliError::Geom)?;
            let data = sphere_preset_dataset(n, args.seed).map_err(CliError::Geom)?;
            write_file(
                &args.output,
                &dataset_to_string(&data, &["x1".into(), "x2".into()], DATASET_TAG),
            )?;
            if let Some(truth_path) = &args.truth_output {
                write_truth(truth_path, &truth)?;
            }
            Ok(())
        }
        "pentagon" => {
            let n = args.n.unwrap_or(50);
            let set = generate_pentagons(n, args.noise, args.deform, args.seed)
                .map_err(CliError::Geom)?;
            write_file(&args.output, &shapes_to_string(&set))
        }
        "custom" => {
            let manifold = match args.manifold.as_deref() {
                Some("euclidean") => ManifoldKind::euclidean(args.dim),
                Some("sphere") | None => ManifoldKind::sphere(args.dim.max(2)),
                Some("preshape") => ManifoldKind::preshape(args.k),
                Some(other) => {
                    return Err(CliError::Usage(format!("unknown manifold `{other}`")));
                }
            }
            .map_err(CliError::Geom)?;
            let n = args.n.unwrap_or(100);
            let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
            let dim = manifold.ambient_dim();
            let mu = if manifold.is_spherical() {
                let raw: Vec<f64> = (0..dim)
                    .map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal))
                    .collect();
                ManifoldPoint::project(manifold, &raw).map_err(CliError::Geom)?
            } else {
                let raw: Vec<f64> = (0..dim).map(|_| rng.random::<f64>()).collect();
                ManifoldPoint::new(manifold, raw).map_err(CliError::Geom)?
            };
            let columns: Vec<TangentVector> = (0..args.q)
                .map(|_| {
                    let raw: Vec<f64> = (0..dim)
                        .map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal))
                        .collect();
                    let t = project_tangent(&mu, &raw)?;
                    let norm = t.norm().max(1e-9);
                    Ok(t.scaled(0.3 / norm))
                })
                .collect::<Result<_, GeomError>>()
                .map_err(CliError::Geom)?;
            let truth = GeodesicModel::with_columns(mu.clone(), columns.clone(), args.tau)
                .map_err(CliError::Geom)?;
            let data = if manifold.is_spherical() {
                generate_sphere_dataset(&mu, &columns, args.tau, n, args.seed.wrapping_add(1))
                    .map_err(CliError::Geom)?
            } else {
                let sigma = 1.0 / args.tau.sqrt();
                let records = (0..n)
                    .map(|_| {
                        let x: Vec<f64> = (0..args.q).map(|_| rng.random::<f64>()).collect();
                        let center = truth.predict(&x)?;
                        let coords: Vec<f64> = center
                            .coords()
                            .iter()
                            .map(|c| c + sigma * rng.sample::<f64, _>(rand_distr::StandardNormal))
                            .collect();
                        Ok(Record {
                            covariates: x,
                            response: ManifoldPoint::new(manifold, coords)?,
                        })
                    })
                    .collect::<Result<Vec<_>, GeomError>>()
                    .map_err(CliError::Geom)?;
                Dataset::new(manifold, args.q, records).map_err(CliError::Geom)?
            };
            let names: Vec<String> = (1..=args.q).map(|i| format!("x{i}")).collect();
            write_file(&args.output, &dataset_to_string(&data, &names, DATASET_TAG))?;
            if let Some(truth_path) = &args.truth_output {
                write_truth(truth_path, &truth)?;
            }
            Ok(())
        }
        other => Err(CliError::Usage(format!(
            "unknown generator `{other}` (expected sphere-table1, pentagon, or custom)"
        ))),
    }
}

pub struct FitArgs {
    pub input: PathBuf,
    pub output: PathBuf,
    pub report: Option<PathBuf>,
    pub mode: String,
    pub gamma: f64,
    pub q: Option<usize>,
    pub max_iter: usize,
    pub tol: f64,
    pub seed: u64,
    pub standardize: bool,
    pub poly_degree: usize,
    pub init: Option<PathBuf>,
    pub nodes: usize,
    pub manifold: Option<String>,
}

pub fn parse_mode(mode: &str, gamma: f64) -> Result<FitMode, CliError> {
    match mode {
        "geodesic" => Ok(FitMode::Geodesic),
        "regularized" => {
            if gamma < 0.0 {
                return Err(CliError::Usage("--gamma must be >= 0".into()));
            }
            Ok(FitMode::Regularized { gamma })
        }
        "bgrm" => Ok(FitMode::Bgrm),
        other => Err(CliError::Usage(format!(
            "unknown mode `{other}` (expected geodesic, regularized, or bgrm)"
        ))),
    }
}

/// Loads a dataset file or a shapes file; shapes are Procrustes-aligned and
/// lifted onto the preshape sphere.
pub fn load_dataset(path: &Path) -> Result<(Dataset, Vec<String>), CliError> {
    let text = read_file(path)?;
    let tag = text.lines().next().unwrap_or("");
    if tag == SHAPES_TAG {
        let set = parse_shapes(path, &text)?;
        let aligned = procrustes_align(&set).map_err(CliError::Geom)?;
        let data = aligned.to_dataset().map_err(CliError::Geom)?;
        Ok((data, aligned.covariate_names))
    } else {
        parse_dataset(path, &text)
    }
}

fn check_manifold_flag(flag: Option<&str>, manifold: ManifoldKind) -> Result<(), CliError> {
    let Some(flag) = flag else { return Ok(()) };
    let ok = matches!(
        (flag, manifold),
        ("euclidean", ManifoldKind::Euclidean { .. })
            | ("sphere", ManifoldKind::Sphere { .. })
            | ("preshape", ManifoldKind::PreshapeSphere { .. })
    );
    if ok {
        Ok(())
    } else {
        Err(CliError::Usage(format!(
            "--manifold {flag} does not match the input file's manifold"
        )))
    }
}

fn quad_config(nodes: usize) -> Result<QuadratureConfig, CliError> {
    QuadratureConfig::new(nodes).map_err(CliError::Geom)
}

/// Output paths are validated before any compute starts: the parent
/// directory must already exist.
fn ensure_writable(path: &Path) -> Result<(), CliError> {
    let parent = path.parent().filter(|p| !p.as_os_str().is_empty());
    if let Some(parent) = parent {
        if !parent.is_dir() {
            return Err(CliError::Io {
                path: path.to_path_buf(),
                source: std::io::Error::new(
                    std::io::ErrorKind::NotFound,
                    "output directory does not exist",
                ),
            });
        }
    }
    Ok(())
}

pub fn cmd_fit(args: &FitArgs) -> Result<(), CliError> {
    ensure_writable(&args.output)?;
    if let Some(report) = &args.report {
        ensure_writable(report)?;
    }
    let (raw_data, _names) = load_dataset(&args.input)?;
    check_manifold_flag(args.manifold.as_deref(), raw_data.manifold())?;
    if let Some(q) = args.q {
        if q != raw_data.q() {
            return Err(CliError::Usage(format!(
                "--q {q} does not match the input's covariate width {}",
                raw_data.q()
            )));
        }
    }
    let mode = parse_mode(&args.mode, args.gamma)?;
    let cfg = FitConfig {
        tol: args.tol,
        max_iter: args.max_iter,
        covariate_standardization: args.standardize,
        seed: args.seed,
        ..FitConfig::default()
    };
    let quad = quad_config(args.nodes)?;

    let init_doc = match &args.init {
        Some(path) => Some(parse_model(path, &read_file(path)?)?),
        None => None,
    };
    // expansion: a warm start dictates the frame; otherwise --poly-degree
    let expansion = match &init_doc {
        Some(doc) => doc.expansion,
        None if args.poly_degree > 1 => {
            let (_, (lo, hi)) =
                expand_chebyshev(&raw_data, args.poly_degree).map_err(CliError::Geom)?;
            Some(Expansion {
                lo,
                hi,
                width: args.poly_degree,
            })
        }
        None => None,
    };
    let data = match expansion {
        Some(e) => expand_with(&raw_data, e)?,
        None => raw_data,
    };

    let started = Instant::now();
    let (model, report) = match &init_doc {
        Some(doc) => fit_with_init(&data, mode, &cfg, quad, &doc.model).map_err(CliError::Geom)?,
        None => fit(&data, data.q(), mode, &cfg, quad).map_err(CliError::Geom)?,
    };
    let wall_ms = started.elapsed().as_millis();

    write_file(
        &args.output,
        &model_to_string(&ModelDocument { model, expansion }),
    )?;
    let report_path = args
        .report
        .clone()
        .unwrap_or_else(|| args.output.with_extension("report"));
    write_file(&report_path, &report_to_string(&report, wall_ms))?;
    Ok(())
}

fn expand_with(data: &Dataset, e: Expansion) -> Result<Dataset, CliError> {
    if data.q() != 1 {
        return Err(CliError::Usage(
            "covariate expansion needs a single-covariate dataset".into(),
        ));
    }
    let records = data
        .records()
        .iter()
        .map(|r| Record {
            covariates: chebyshev_features(r.covariates[0], e.lo, e.hi, e.width),
            response: r.response.clone(),
        })
        .collect();
    Dataset::new(data.manifold(), e.width, records).map_err(CliError::Geom)
}

pub struct PredictArgs {
    pub model: PathBuf,
    pub output: PathBuf,
    pub covariates: Option<String>,
    pub range: Option<String>,
}

fn parse_covariates(args: &PredictArgs) -> Result<Vec<Vec<f64>>, CliError> {
    if let Some(range) = &args.range {
        let (lo, hi) = range
            .split_once("..")
            .ok_or_else(|| CliError::Usage("--range expects `lo..hi`".into()))?;
        let lo: i64 = lo
            .trim()
            .parse()
            .map_err(|_| CliError::Usage("--range: invalid integer".into()))?;
        let hi: i64 = hi
            .trim()
            .parse()
            .map_err(|_| CliError::Usage("--range: invalid integer".into()))?;
        if hi < lo {
            return Err(CliError::Usage("--range: hi must be >= lo".into()));
        }
        return Ok((lo..=hi).map(|x| vec![x as f64]).collect());
    }
    if let Some(spec) = &args.covariates {
        let rows: Result<Vec<Vec<f64>>, _> = spec
            .split(',')
            .map(|row| {
                row.split_whitespace()
                    .map(str::parse::<f64>)
                    .collect::<Result<Vec<f64>, _>>()
            })
            .collect();
        let rows = rows.map_err(|_| CliError::Usage("--covariates: invalid number".into()))?;
        if rows.is_empty() || rows.iter().any(Vec::is_empty) {
            return Err(CliError::Usage("--covariates: empty covariate list".into()));
        }
        return Ok(rows);
    }
    Err(CliError::Usage(
        "predict needs --covariates or --range".into(),
    ))
}

pub fn cmd_predict(args: &PredictArgs) -> Result<(), CliError> {
    ensure_writable(&args.output)?;
    let doc = parse_model(&args.model, &read_file(&args.model)?)?;
    let raw = parse_covariates(args)?;
    let expanded: Vec<Vec<f64>> = match doc.expansion {
        Some(e) => raw
            .iter()
            .map(|x| {
                if x.len() != 1 {
                    return Err(CliError::Usage(
                        "expanded models take a single raw covariate".into(),
                    ));
                }
                Ok(chebyshev_features(x[0], e.lo, e.hi, e.width))
            })
            .collect::<Result<_, _>>()?,
        None => raw.clone(),
    };
    for x in &expanded {
        if x.len() != doc.model.q() {
            return Err(CliError::Usage(format!(
                "covariate dimension {} does not match the model's q = {}",
                x.len(),
                doc.model.q()
            )));
        }
    }
    let predictions: Vec<ManifoldPoint> = expanded
        .iter()
        .map(|x| doc.model.predict(x))
        .collect::<Result<_, _>>()
        .map_err(CliError::Geom)?;

    let manifold = doc.model.manifold();
    if let ManifoldKind::PreshapeSphere { landmarks } = manifold {
        // decoded landmark outlines, one shape per covariate
        let shapes: Vec<LandmarkShape> = raw
            .iter()
            .zip(&predictions)
            .map(|(x, p)| {
                let decoded = from_preshape(p, landmarks)?;
                LandmarkShape::new(decoded.points, x.clone())
            })
            .collect::<Result<_, _>>()
            .map_err(CliError::Geom)?;
        let names: Vec<String> = (1..=raw[0].len()).map(|i| format!("x{i}")).collect();
        let set = ShapeSet::new(shapes, names).map_err(CliError::Geom)?;
        write_file(&args.output, &shapes_to_string(&set))
    } else {
        let records: Vec<Record> = raw
            .iter()
            .zip(&predictions)
            .map(|(x, p)| Record {
                covariates: x.clone(),
                response: p.clone(),
            })
            .collect();
        let q = raw[0].len();
        let data = Dataset::new(manifold, q, records).map_err(CliError::Geom)?;
        let names: Vec<String> = (1..=q).map(|i| format!("x{i}")).collect();
        write_file(
            &args.output,
            &dataset_to_string(&data, &names, PREDICTIONS_TAG),
        )
    }
}

pub struct EvaluateArgs {
    pub model: PathBuf,
    pub input: PathBuf,
    pub output: PathBuf,
    pub permutations: usize,
    pub compare: bool,
    pub mode: String,
    pub seed: u64,
    pub max_iter: usize,
    pub tol: f64,
    pub nodes: usize,
}

pub fn cmd_evaluate(args: &EvaluateArgs) -> Result<(), CliError> {
    ensure_writable(&args.output)?;
    let doc = parse_model(&args.model, &read_file(&args.model)?)?;
    let (raw_data, _) = load_dataset(&args.input)?;
    if raw_data.manifold() != doc.model.manifold() {
        return Err(CliError::Usage(
            "model and dataset live on different manifolds".into(),
        ));
    }
    let quad = quad_config(args.nodes)?;
    let model_data = match doc.expansion {
        Some(e) => expand_with(&raw_data, e)?,
        None => raw_data.clone(),
    };
    let main_rs = r_squared(&doc.model, &model_data).map_err(CliError::Geom)?;

    let mut rows: Vec<(String, f64, f64, bool)> = Vec::new();
    if args.compare {
        // ambient linear baseline on the raw covariates
        let ambient =
            ManifoldKind::euclidean(raw_data.manifold().ambient_dim()).map_err(CliError::Geom)?;
        let ambient_records: Vec<Record> = raw_data
            .records()
            .iter()
            .map(|r| {
                Ok(Record {
                    covariates: r.covariates.clone(),
                    response: ManifoldPoint::new(ambient, r.response.coords().to_vec())?,
                })
            })
            .collect::<Result<_, GeomError>>()
            .map_err(CliError::Geom)?;
        let ambient_data =
            Dataset::new(ambient, raw_data.q(), ambient_records).map_err(CliError::Geom)?;
        let linear = fit_ols(&ambient_data).map_err(CliError::Geom)?;
        let linear_rs = r_squared_linear_ambient(&linear, &raw_data).map_err(CliError::Geom)?;
        rows.push(("linear".into(), linear_rs.value, linear_rs.raw, true));

        // plain geodesic regression on the raw covariates
        let cfg = FitConfig {
            tol: args.tol,
            max_iter: args.max_iter,
            ..FitConfig::default()
        };
        let (gm, _) =
            fit(&raw_data, raw_data.q(), FitMode::Geodesic, &cfg, quad).map_err(CliError::Geom)?;
        let geo_rs = r_squared(&gm, &raw_data).map_err(CliError::Geom)?;
        rows.push(("geodesic".into(), geo_rs.value, geo_rs.raw, false));
        rows.push(("bgrm".into(), main_rs.value, main_rs.raw, false));
    } else {
        rows.push(("model".into(), main_rs.value, main_rs.raw, false));
    }

    let p_value = if args.permutations > 0 {
        let mode = parse_mode(&args.mode, 0.0)?;
        let cfg = FitConfig {
            tol: args.tol,
            max_iter: args.max_iter,
            ..FitConfig::default()
        };
        Some(
            permutation_pvalue(
                &raw_data,
                raw_data.q(),
                mode,
                &cfg,
                args.permutations,
                args.seed,
                quad,
            )
            .map_err(CliError::Geom)?,
        )
    } else {
        None
    };

    // residual summary of the evaluated model
    let mut sum = 0.0;
    let mut max: f64 = 0.0;
    for rec in model_data.records() {
        let d = geomreg_core::manifold::distance(
            &rec.response,
            &doc.model.predict(&rec.covariates).map_err(CliError::Geom)?,
        )
        .map_err(CliError::Geom)?;
        sum += d;
        max = max.max(d);
    }

    let mut out = String::new();
    use std::fmt::Write as _;
    let _ = writeln!(out, "{}", formats::EVAL_TAG);
    let _ = writeln!(out, "model\tr_squared\traw_r_squared\tresiduals");
    for (name, value, raw, ambient) in &rows {
        let _ = writeln!(
            out,
            "{name}\t{}\t{}\t{}",
            formats::fmt_f64(*value),
            formats::fmt_f64(*raw),
            if *ambient { "euclidean" } else { "geodesic" }
        );
    }
    let _ = writeln!(
        out,
        "residual_mean {}",
        formats::fmt_f64(sum / model_data.len() as f64)
    );
    let _ = writeln!(out, "residual_max {}", formats::fmt_f64(max));
    if let Some(p) = p_value {
        let _ = writeln!(out, "p_value {}", formats::fmt_f64(p));
    }
    write_file(&args.output, &out)
}

pub struct PlotArgs {
    pub kind: String,
    pub input: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub truth: Option<PathBuf>,
    pub output: PathBuf,
}

pub fn cmd_plot(args: &PlotArgs) -> Result<(), CliError> {
    ensure_writable(&args.output)?;
    let svg = match args.kind.as_str() {
        "sphere-geodesic" => plot_sphere_geodesic(args)?,
        "shape-sequence" => plot_shape_sequence(args)?,
        "dimension-bars" => plot_dimension_bars(args)?,
        "energy-trace" => plot_energy_trace(args)?,
        other => {
            return Err(CliError::Usage(format!(
                "unknown plot kind `{other}` (expected sphere-geodesic, shape-sequence, dimension-bars, or energy-trace)"
            )));
        }
    };
    write_file(&args.output, &svg)
}

fn require_input(args: &PlotArgs) -> Result<&PathBuf, CliError> {
    args.input
        .as_ref()
        .ok_or_else(|| CliError::Usage(format!("plot kind `{}` needs --input", args.kind)))
}

fn load_model_doc(path: &Path) -> Result<ModelDocument, CliError> {
    parse_model(path, &read_file(path)?)
}

/// Orthographic projection (the viewing axis is the third coordinate) of a
/// 3-ambient sphere dataset: points colored by the first covariate, the
/// estimated geodesic in red, the true geodesic in blue.
fn plot_sphere_geodesic(args: &PlotArgs) -> Result<String, CliError> {
    let input = require_input(args)?;
    let (data, _) = load_dataset(input)?;
    if !data.manifold().is_spherical() || data.manifold().ambient_dim() != 3 {
        return Err(CliError::Usage(
            "sphere-geodesic needs a sphere dataset with ambient dimension 3".into(),
        ));
    }
    let frame = Frame::new(-1.1, 1.1, -1.1, 1.1);
    let mut svg = Svg::new();
    let (cx, cy) = frame.map(0.0, 0.0);
    let (ex, _) = frame.map(1.0, 0.0);
    svg.circle_outline(cx, cy, ex - cx, "#888888", 1.0);

    let xs: Vec<f64> = data.records().iter().map(|r| r.covariates[0]).collect();
    let lo = xs.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let span = (hi - lo).max(1e-12);
    for rec in data.records() {
        let t = (rec.covariates[0] - lo) / span;
        let (px, py) = frame.map(rec.response.coords()[0], rec.response.coords()[1]);
        svg.circle(px, py, 3.0, &ramp(t));
    }

    let mut draw_curve = |doc: &ModelDocument, color: &str| -> Result<(), CliError> {
        let q = doc.model.q();
        let x_mean: Vec<f64> = (0..q)
            .map(|i| {
                data.records()
                    .iter()
                    .map(|r| r.covariates.get(i).copied().unwrap_or(0.0))
                    .sum::<f64>()
                    / data.len() as f64
            })
            .collect();
        let mut pts = Vec::with_capacity(101);
        for step in 0..=100 {
            let x0 = lo + span * step as f64 / 100.0;
            let mut x = x_mean.clone();
            x[0] = x0;
            let p = doc.model.predict(&x).map_err(CliError::Geom)?;
            pts.push(frame.map(p.coords()[0], p.coords()[1]));
        }
        svg.polyline(&pts, color, 2.0, false);
        Ok(())
    };
    if let Some(path) = &args.truth {
        draw_curve(&load_model_doc(path)?, "#0000ff")?;
    }
    if let Some(path) = &args.model {
        draw_curve(&load_model_doc(path)?, "#ff0000")?;
    }
    Ok(svg.finish())
}

/// Landmark outlines colored from blue to red by covariate order.
fn plot_shape_sequence(args: &PlotArgs) -> Result<String, CliError> {
    let input = require_input(args)?;
    let set = parse_shapes(input, &read_file(input)?)?;
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for s in &set.shapes {
        for p in &s.points {
            for a in 0..2 {
                lo[a] = lo[a].min(p[a]);
                hi[a] = hi[a].max(p[a]);
            }
        }
    }
    let frame = Frame::new(lo[0], hi[0], lo[1], hi[1]);
    let covs: Vec<f64> = set.shapes.iter().map(|s| s.covariate[0]).collect();
    let c_lo = covs.iter().cloned().fold(f64::INFINITY, f64::min);
    let c_hi = covs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let span = (c_hi - c_lo).max(1e-12);
    let mut svg = Svg::new();
    for s in &set.shapes {
        let t = (s.covariate[0] - c_lo) / span;
        let pts: Vec<(f64, f64)> = s.points.iter().map(|p| frame.map(p[0], p[1])).collect();
        svg.polyline(&pts, &ramp(t), 1.2, true);
    }
    Ok(svg.finish())
}

/// Two bars: the model's original column count and its retained count.
fn plot_dimension_bars(args: &PlotArgs) -> Result<String, CliError> {
    let model_path = args
        .model
        .as_ref()
        .ok_or_else(|| CliError::Usage("dimension-bars needs --model".into()))?;
    let doc = load_model_doc(model_path)?;
    let original = doc.model.q();
    let retained = doc.model.active_count();
    let mut svg = Svg::new();
    let base = HEIGHT - 80.0;
    let scale = (HEIGHT - 160.0) / original.max(1) as f64;
    let bar_w = 120.0;
    let gap = 160.0;
    let x0 = WIDTH / 2.0 - bar_w - gap / 2.0;
    let x1 = WIDTH / 2.0 + gap / 2.0;
    svg.rect(
        x0,
        base - original as f64 * scale,
        bar_w,
        original as f64 * scale,
        "#0000ff",
    );
    svg.rect(
        x1,
        base - retained as f64 * scale,
        bar_w,
        retained as f64 * scale,
        "#ff0000",
    );
    svg.text(x0, base + 24.0, 16.0, &format!("original {original}"));
    svg.text(x1, base + 24.0, 16.0, &format!("retained {retained}"));
    svg.line(40.0, base, WIDTH - 40.0, base, "#000000", 1.0);
    Ok(svg.finish())
}

/// The fit's energy trace against the iteration index.
fn plot_energy_trace(args: &PlotArgs) -> Result<String, CliError> {
    let input = require_input(args)?;
    let report = parse_report(input, &read_file(input)?)?;
    if report.energy_trace.is_empty() {
        return Err(CliError::Usage("report has an empty energy trace".into()));
    }
    let lo = report
        .energy_trace
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    let hi = report
        .energy_trace
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    let frame = Frame::new(
        0.0,
        (report.energy_trace.len() - 1).max(1) as f64,
        lo,
        if hi > lo { hi } else { lo + 1.0 },
    );
    let mut svg = Svg::new();
    let (ax0, ay0) = frame.map(0.0, lo);
    let (ax1, _) = frame.map((report.energy_trace.len() - 1).max(1) as f64, lo);
    let (_, ay1) = frame.map(0.0, if hi > lo { hi } else { lo + 1.0 });
    svg.line(ax0, ay0, ax1, ay0, "#000000", 1.0);
    svg.line(ax0, ay0, ax0, ay1, "#000000", 1.0);
    let pts: Vec<(f64, f64)> = report
        .energy_trace
        .iter()
        .enumerate()
        .map(|(i, e)| frame.map(i as f64, *e))
        .collect();
    svg.polyline(&pts, "#ff0000", 2.0, false);
    svg.text(
        ax0,
        ay1 - 10.0,
        14.0,
        &format!("energy trace ({} iterations)", report.iterations),
    );
    Ok(svg.finish())
}

/// Parses a report back (the energy-trace plot and tests read these).
pub fn read_report(path: &Path) -> Result<geomreg_core::regression::FitReport, CliError> {
    parse_report(path, &read_file(path)?)
}
