use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use geomreg_cli::commands::{
    cmd_evaluate, cmd_fit, cmd_plot, cmd_predict, cmd_simulate, EvaluateArgs, FitArgs, PlotArgs,
    PredictArgs, SimulateArgs,
};

/// Geodesic regression on spheres, preshape spheres, and Euclidean space,
/// with automatic relevance determination.
#[derive(Parser)]
#[command(name = "geomreg", version, disable_help_subcommand = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset (and its ground-truth model where one
    /// exists)
    Simulate(SimulateCli),
    /// Fit a geodesic regression model to a dataset or shape file
    Fit(FitCli),
    /// Predict responses from a saved model at new covariates
    Predict(PredictCli),
    /// Evaluate a model: R^2, comparison rows, optional permutation p-value
    Evaluate(EvaluateCli),
    /// Render an SVG plot from datasets, models, or fit reports
    Plot(PlotCli),
}

#[derive(Args)]
struct SimulateCli {
    /// Generator: sphere-table1, pentagon, or custom
    #[arg(long)]
    generator: String,
    /// Output dataset (or shapes) file
    #[arg(long)]
    output: PathBuf,
    /// Where to write the ground-truth model, when the generator has one
    #[arg(long)]
    truth_output: Option<PathBuf>,
    /// Number of records (generator-specific default otherwise)
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Landmark noise level (pentagon)
    #[arg(long, default_value_t = geomreg_core::shape::PENTAGON_NOISE)]
    noise: f64,
    /// Aspect deformation rate per unit covariate (pentagon)
    #[arg(long, default_value_t = geomreg_core::shape::PENTAGON_DEFORM)]
    deform: f64,
    /// Noise precision (custom)
    #[arg(long, default_value_t = 100.0)]
    tau: f64,
    /// Manifold for the custom generator: euclidean, sphere, or preshape
    #[arg(long)]
    manifold: Option<String>,
    /// Ambient dimension (custom euclidean/sphere)
    #[arg(long, default_value_t = 3)]
    dim: usize,
    /// Landmark count (custom preshape)
    #[arg(long, default_value_t = 3)]
    k: usize,
    /// Covariate count (custom)
    #[arg(long, default_value_t = 1)]
    q: usize,
}

#[derive(Args)]
struct FitCli {
    #[arg(long)]
    input: PathBuf,
    /// Output model file (the fit report lands next to it unless --report)
    #[arg(long)]
    output: PathBuf,
    #[arg(long)]
    report: Option<PathBuf>,
    /// geodesic, regularized, or bgrm
    #[arg(long, default_value = "bgrm")]
    mode: String,
    /// Regularization weight for --mode regularized
    #[arg(long, default_value_t = 0.0)]
    gamma: f64,
    /// Expected covariate width (validated against the input)
    #[arg(long)]
    q: Option<usize>,
    #[arg(long, default_value_t = 500)]
    max_iter: usize,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// on or off
    #[arg(long, default_value = "on")]
    standardize: String,
    /// Widen a scalar covariate into this many Chebyshev features
    #[arg(long, default_value_t = 1)]
    poly_degree: usize,
    /// Warm-start from a saved model file
    #[arg(long)]
    init: Option<PathBuf>,
    /// Quadrature node count
    #[arg(long, default_value_t = 128)]
    nodes: usize,
    /// euclidean, sphere, or preshape; validated against the input file
    #[arg(long)]
    manifold: Option<String>,
}

#[derive(Args)]
struct PredictCli {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    output: PathBuf,
    /// Comma-separated covariate rows, components space-separated
    #[arg(long)]
    covariates: Option<String>,
    /// Integer covariate range lo..hi (inclusive)
    #[arg(long)]
    range: Option<String>,
}

#[derive(Args)]
struct EvaluateCli {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    /// Permutation count for the p-value (0 disables; minimum 100 otherwise)
    #[arg(long, default_value_t = 0)]
    permutations: usize,
    /// Add linear and geodesic baseline rows
    #[arg(long, default_value_t = false)]
    compare: bool,
    /// Refit mode for permutation replicates
    #[arg(long, default_value = "geodesic")]
    mode: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 200)]
    max_iter: usize,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    #[arg(long, default_value_t = 128)]
    nodes: usize,
}

#[derive(Args)]
struct PlotCli {
    /// sphere-geodesic, shape-sequence, dimension-bars, or energy-trace
    #[arg(long)]
    kind: String,
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    model: Option<PathBuf>,
    /// Ground-truth model overlay (sphere-geodesic)
    #[arg(long)]
    truth: Option<PathBuf>,
    #[arg(long)]
    output: PathBuf,
}

fn parse_standardize(v: &str) -> Result<bool, geomreg_cli::CliError> {
    match v {
        "on" => Ok(true),
        "off" => Ok(false),
        other => Err(geomreg_cli::CliError::Usage(format!(
            "--standardize expects on or off, got `{other}`"
        ))),
    }
}

fn run() -> Result<(), geomreg_cli::CliError> {
    let cli = Cli::parse();
    match cli.command {
        Command::Simulate(a) => cmd_simulate(&SimulateArgs {
            generator: a.generator,
            output: a.output,
            truth_output: a.truth_output,
            n: a.n,
            seed: a.seed,
            noise: a.noise,
            deform: a.deform,
            tau: a.tau,
            manifold: a.manifold,
            dim: a.dim,
            k: a.k,
            q: a.q,
        }),
        Command::Fit(a) => cmd_fit(&FitArgs {
            input: a.input,
            output: a.output,
            report: a.report,
            mode: a.mode,
            gamma: a.gamma,
            q: a.q,
            max_iter: a.max_iter,
            tol: a.tol,
            seed: a.seed,
            standardize: parse_standardize(&a.standardize)?,
            poly_degree: a.poly_degree,
            init: a.init,
            nodes: a.nodes,
            manifold: a.manifold,
        }),
        Command::Predict(a) => cmd_predict(&PredictArgs {
            model: a.model,
            output: a.output,
            covariates: a.covariates,
            range: a.range,
        }),
        Command::Evaluate(a) => cmd_evaluate(&EvaluateArgs {
            model: a.model,
            input: a.input,
            output: a.output,
            permutations: a.permutations,
            compare: a.compare,
            mode: a.mode,
            seed: a.seed,
            max_iter: a.max_iter,
            tol: a.tol,
            nodes: a.nodes,
        }),
        Command::Plot(a) => cmd_plot(&PlotArgs {
            kind: a.kind,
            input: a.input,
            model: a.model,
            truth: a.truth,
            output: a.output,
        }),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("geomreg: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
