//! Command-line front end. [`run`] parses arguments, dispatches, and maps
//! failures to exit codes: 1 for invalid input, 2 for numerical failures,
//! 3 for I/O errors. Errors are reported on stderr as one JSON line
//! `{"code": …, "message": …}`.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::Serialize;
use serde_json::json;

use crate::error::{Error, ErrorClass, Result, SpecError};
use crate::experiments::{
    emit_report, run_histogram, run_transition_sweep, ExperimentBase, ExperimentConfig, Report, ReportFormat,
    SweepAxis, DEFAULT_BINS,
};
use crate::format::{fmt_opt, fmt_sig, write_atomic, write_json, DEFAULT_PRECISION};
use crate::model::{from_sbm, p_from_w, validate_spec, GsbmSpec, NoiseKind, SbmParams};
use crate::prediction::{
    find_upper_edge, hidden_critical_w, hidden_threshold, predict_outlier, unbalanced_critical_w,
    unbalanced_threshold, EdgeMethod,
};
use crate::qve::{density_with, linear_grid, QveOptions, DEFAULT_ETA, DEFAULT_GRID_POINTS};
use crate::sampler::SampleSeed;
use crate::spectra::{
    check_interlacing, check_local_law_with, check_outlier_bounds, eigen_symmetric, resolvent_quadratic_form_with,
    SpectralReport,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;
pub const EXIT_IO: i32 = 3;

pub fn exit_code(class: ErrorClass) -> i32 {
    match class {
        ErrorClass::Validation => EXIT_VALIDATION,
        ErrorClass::Numerical => EXIT_NUMERICAL,
        ErrorClass::Io => EXIT_IO,
    }
}

#[derive(Debug, Parser)]
#[command(name = "gsbm", version, about = "Spectra of spiked two-block random matrices")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample a matrix M and write it as CSV, JSON or flat binary.
    Sample(SampleArgs),
    /// Limiting spectral density of H on a grid.
    Density(DensityArgs),
    /// Upper edge of the limiting spectrum of H.
    Edge(ModelCommand),
    /// Predicted outlier location and critical spike strength.
    Predict(ModelCommand),
    /// Closed-form detection thresholds of the named models.
    Threshold(ThresholdArgs),
    /// Eigenvalue histogram of one sample with the prediction attached.
    Histogram(HistogramArgs),
    /// Gap and overlap over a grid of w, p or lambda values.
    Sweep(SweepArgs),
    /// Interlacing, local-law and resolvent diagnostics on one sample.
    Check(ModelCommand),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Master seed.
    #[arg(long, env = "GSBM_SEED", hide_env_values = true, default_value_t = 0)]
    pub seed: u64,
    /// Output path (a directory for histogram and sweep); stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Output format.
    #[arg(long, value_enum)]
    pub format: Option<OutputFormat>,
    /// Significant digits of numeric output; 17 prints the shortest exact form.
    #[arg(long, default_value_t = DEFAULT_PRECISION)]
    pub precision: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelKind {
    /// Bernoulli model with one planted community, shifted by q.
    Hidden,
    /// Bernoulli model with two communities, shifted by (p+q)/2.
    Unbalanced,
    /// Variance-profile matrix with synthetic noise.
    Gsbm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SpikeKind {
    /// Constant spike vector.
    Flat,
    /// Spike supported on the first block.
    Planted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NoiseArg {
    Gaussian,
    Rademacher,
    Bernoulli,
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    /// Model family.
    #[arg(long, value_enum, default_value_t = ModelKind::Gsbm)]
    pub model: ModelKind,
    /// JSON file with a full variance-profile specification.
    #[arg(long, conflicts_with_all = ["alpha1", "alpha2", "theta1", "theta2"])]
    pub spec: Option<PathBuf>,
    /// Matrix dimension.
    #[arg(long)]
    pub n: Option<usize>,
    /// Fraction of indices in the first block.
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Size of the first block (instead of --gamma).
    #[arg(long, conflicts_with = "gamma")]
    pub n1: Option<usize>,
    /// Inter-community edge probability; also the base rate of Bernoulli noise.
    #[arg(long)]
    pub q: Option<f64>,
    /// Intra-community edge probability.
    #[arg(long, conflicts_with = "w")]
    pub p: Option<f64>,
    /// Signal strength w = (p - q) sqrt(n).
    #[arg(long)]
    pub w: Option<f64>,
    /// Variance factor of the first diagonal block.
    #[arg(long, default_value_t = 1.0)]
    pub alpha1: f64,
    /// Variance factor of the second diagonal block.
    #[arg(long, default_value_t = 1.0)]
    pub alpha2: f64,
    /// Shape of the spike vector.
    #[arg(long, value_enum, default_value_t = SpikeKind::Flat)]
    pub spike: SpikeKind,
    /// Spike value on the first block (requires --theta2).
    #[arg(long, requires = "theta2")]
    pub theta1: Option<f64>,
    /// Spike value on the second block (requires --theta1).
    #[arg(long, requires = "theta1")]
    pub theta2: Option<f64>,
    /// Spike strength.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Noise distribution of sampled variance-profile matrices.
    #[arg(long, value_enum, default_value_t = NoiseArg::Gaussian)]
    pub noise: NoiseArg,
}

#[derive(Debug, Clone, Args)]
pub struct ModelCommand {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SampleArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub common: CommonArgs,
    /// Write the flat binary format (u64 n, then the upper triangle as f64, little endian) to --out.
    #[arg(long, requires = "out")]
    pub binary: bool,
}

#[derive(Debug, Clone, Args)]
pub struct DensityArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub common: CommonArgs,
    /// Left end of the grid; defaults to just beyond the support bound.
    #[arg(long, allow_hyphen_values = true)]
    pub from: Option<f64>,
    /// Right end of the grid.
    #[arg(long, allow_hyphen_values = true)]
    pub to: Option<f64>,
    /// Number of grid points.
    #[arg(long, default_value_t = DEFAULT_GRID_POINTS)]
    pub points: usize,
    /// Distance of the evaluation line from the real axis.
    #[arg(long, default_value_t = DEFAULT_ETA)]
    pub eta: f64,
    /// Iteration cap of the solver.
    #[arg(long, default_value_t = crate::qve::DEFAULT_MAX_ITER)]
    pub max_iter: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ThresholdModel {
    Hidden,
    Unbalanced,
}

#[derive(Debug, Clone, Args)]
pub struct ThresholdArgs {
    /// Model whose threshold is printed.
    #[arg(value_enum)]
    pub which: ThresholdModel,
    /// Inter-community edge probability.
    #[arg(long)]
    pub q: f64,
    /// Matrix dimension.
    #[arg(long)]
    pub n: usize,
    /// Community fraction (hidden model only).
    #[arg(long)]
    pub gamma: Option<f64>,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args)]
pub struct HistogramArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub common: CommonArgs,
    /// Number of equal-width bins.
    #[arg(long, default_value_t = DEFAULT_BINS)]
    pub bins: usize,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub common: CommonArgs,
    /// Swept quantity; w for Bernoulli models and lambda otherwise by default.
    #[arg(long, value_enum)]
    pub axis: Option<AxisArg>,
    /// Comma-separated sweep values.
    #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
    pub values: Vec<f64>,
    /// Independent samples per sweep value.
    #[arg(long, default_value_t = 10)]
    pub trials: usize,
    /// Worker threads.
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AxisArg {
    W,
    P,
    Lambda,
}

/// A fully resolved model.
#[derive(Debug, Clone, Copy)]
pub struct Resolved {
    pub spec: GsbmSpec,
    pub base: ExperimentBase,
}

fn missing(flag: &str, model: &str) -> Error {
    Error::InvalidArgument(format!("--{flag} is required for --model {model}"))
}

fn read_spec_file(path: &Path) -> Result<GsbmSpec> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}

impl ModelArgs {
    pub fn resolve(&self) -> Result<Resolved> {
        match self.model {
            ModelKind::Hidden | ModelKind::Unbalanced => {
                let name = if self.model == ModelKind::Hidden { "hidden" } else { "unbalanced" };
                let n = self.n.ok_or_else(|| missing("n", name))?;
                let q = self.q.ok_or_else(|| missing("q", name))?;
                let n1 = match (self.n1, self.gamma) {
                    (Some(n1), _) => n1,
                    (None, Some(g)) => {
                        if !(g > 0.0 && g < 1.0) {
                            return Err(SpecError::GammaOutOfRange(g).into());
                        }
                        (g * n as f64).round() as usize
                    }
                    (None, None) => return Err(missing("gamma", name)),
                };
                let p = match (self.p, self.w) {
                    (Some(p), _) => p,
                    (None, Some(w)) => p_from_w(q, w, n),
                    (None, None) => return Err(missing("p or --w", name)),
                };
                let params = if self.model == ModelKind::Hidden {
                    SbmParams::hidden(n, n1, p, q)
                } else {
                    SbmParams::unbalanced(n, n1, p, q)
                };
                let spec = from_sbm(&params)?.spec;
                Ok(Resolved {
                    spec,
                    base: ExperimentBase::Sbm { params },
                })
            }
            ModelKind::Gsbm => {
                let mut spec = match &self.spec {
                    Some(path) => read_spec_file(path)?,
                    None => {
                        let gamma = self.gamma.or_else(|| {
                            self.n1.zip(self.n).map(|(n1, n)| n1 as f64 / n as f64)
                        });
                        let gamma = gamma.ok_or_else(|| missing("gamma", "gsbm"))?;
                        let lambda = self.lambda.unwrap_or(0.0);
                        match (self.theta1, self.theta2) {
                            (Some(theta1), Some(theta2)) => GsbmSpec {
                                gamma,
                                alpha1: self.alpha1,
                                alpha2: self.alpha2,
                                theta1,
                                theta2,
                                lambda,
                                n: self.n,
                            },
                            _ => match self.spike {
                                SpikeKind::Flat => GsbmSpec::flat_spike(gamma, self.alpha1, self.alpha2, lambda, self.n),
                                SpikeKind::Planted => {
                                    GsbmSpec::planted_spike(gamma, self.alpha1, self.alpha2, lambda, self.n)
                                }
                            },
                        }
                    }
                };
                if self.spec.is_some() {
                    if let Some(l) = self.lambda {
                        spec.lambda = l;
                    }
                    if self.n.is_some() {
                        spec.n = self.n;
                    }
                }
                let spec = validate_spec(spec)?;
                let noise = match self.noise {
                    NoiseArg::Gaussian => NoiseKind::Gaussian,
                    NoiseArg::Rademacher => NoiseKind::Rademacher,
                    NoiseArg::Bernoulli => NoiseKind::CenteredBernoulli {
                        q: self.q.ok_or_else(|| missing("q", "gsbm --noise bernoulli"))?,
                    },
                };
                Ok(Resolved {
                    spec,
                    base: ExperimentBase::Gsbm { spec, noise },
                })
            }
        }
    }

    fn require_n(&self, resolved: &Resolved) -> Result<usize> {
        resolved
            .spec
            .n
            .ok_or_else(|| Error::InvalidArgument("--n is required to sample a matrix".into()))
    }
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{e}");
                    EXIT_OK
                }
                _ => {
                    let message = e.to_string();
                    let first = message.lines().next().unwrap_or("invalid arguments");
                    report_error(stderr, EXIT_VALIDATION, first.trim_start_matches("error: "));
                    EXIT_VALIDATION
                }
            };
        }
    };
    match dispatch(cli.command, stdout) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let code = exit_code(e.class());
            report_error(stderr, code, &e.to_string());
            code
        }
    }
}

fn report_error(stderr: &mut dyn Write, code: i32, message: &str) {
    let line = json!({ "code": code, "message": message });
    let _ = writeln!(stderr, "{line}");
}

/// Full help text of the program and every subcommand.
pub fn help_text() -> String {
    let mut cmd = Cli::command();
    let mut out = cmd.render_long_help().to_string();
    let names: Vec<String> = cmd.get_subcommands().map(|s| s.get_name().to_string()).collect();
    for name in names {
        let sub = cmd.find_subcommand_mut(&name).expect("subcommand");
        out.push_str(&format!("\n===== {name} =====\n"));
        out.push_str(&sub.render_long_help().to_string());
    }
    out
}

/// Sends `body` to `--out` atomically, or to stdout.
fn emit(common: &CommonArgs, stdout: &mut dyn Write, body: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> Result<()> {
    match &common.out {
        Some(path) => write_atomic(path, body),
        None => body(stdout).map_err(|e| Error::io("<stdout>", e)),
    }
}

fn dispatch(command: Command, stdout: &mut dyn Write) -> Result<()> {
    match command {
        Command::Sample(a) => cmd_sample(a, stdout),
        Command::Density(a) => cmd_density(a, stdout),
        Command::Edge(a) => cmd_edge(a, stdout),
        Command::Predict(a) => cmd_predict(a, stdout),
        Command::Threshold(a) => cmd_threshold(a, stdout),
        Command::Histogram(a) => cmd_histogram(a, stdout),
        Command::Sweep(a) => cmd_sweep(a, stdout),
        Command::Check(a) => cmd_check(a, stdout),
    }
}

fn sample_point(resolved: &Resolved, seed: u64) -> Result<(crate::matrix::SymMatrix, crate::matrix::SymMatrix, Vec<f64>)> {
    let config = ExperimentConfig {
        base: resolved.base,
        axis: match resolved.base {
            ExperimentBase::Sbm { .. } => SweepAxis::W,
            ExperimentBase::Gsbm { .. } => SweepAxis::Lambda,
        },
        sweep_values: Vec::new(),
        trials_per_point: 1,
        master_seed: seed,
        bins: DEFAULT_BINS,
        jobs: None,
    };
    config.base_point()?.sample(SampleSeed::new(seed, 0))
}

fn cmd_sample(a: SampleArgs, stdout: &mut dyn Write) -> Result<()> {
    let resolved = a.model.resolve()?;
    a.model.require_n(&resolved)?;
    let (m, _, _) = sample_point(&resolved, a.common.seed)?;
    let precision = a.common.precision;
    if a.binary {
        return emit(&a.common, stdout, |w| m.write_binary(w));
    }
    match a.common.format.unwrap_or(OutputFormat::Csv) {
        OutputFormat::Csv => emit(&a.common, stdout, |w| m.write_csv(w, precision)),
        OutputFormat::Json => {
            let rows: Vec<&[f64]> = (0..m.dim()).map(|i| m.row(i)).collect();
            let value = json!({ "n": m.dim(), "spec": resolved.spec, "seed": a.common.seed, "rows": rows });
            emit(&a.common, stdout, |w| write_json(w, &value, precision))
        }
    }
}

fn cmd_density(a: DensityArgs, stdout: &mut dyn Write) -> Result<()> {
    let resolved = a.model.resolve()?;
    let spec = resolved.spec;
    if a.points < 2 {
        return Err(Error::InvalidArgument("--points must be at least 2".into()));
    }
    if !(a.eta > 0.0) {
        return Err(Error::InvalidArgument("--eta must be positive".into()));
    }
    let bound = 2.0 * spec.max_row_variance().sqrt() + 0.5;
    let from = a.from.unwrap_or(-bound);
    let to = a.to.unwrap_or(bound);
    if !(from < to) {
        return Err(Error::InvalidArgument("--from must be below --to".into()));
    }
    let opts = QveOptions {
        max_iter: a.max_iter,
        ..QveOptions::default()
    };
    let curve = density_with(&spec, &linear_grid(from, to, a.points), a.eta, &opts)?;
    let precision = a.common.precision;
    match a.common.format.unwrap_or(OutputFormat::Csv) {
        OutputFormat::Csv => emit(&a.common, stdout, |w| curve.write_csv(w, precision)),
        OutputFormat::Json => emit(&a.common, stdout, |w| write_json(w, &curve, precision)),
    }
}

fn cmd_edge(a: ModelCommand, stdout: &mut dyn Write) -> Result<()> {
    let spec = a.model.resolve()?.spec;
    let edge = find_upper_edge(&spec)?;
    let p = a.common.precision;
    match a.common.format.unwrap_or(OutputFormat::Json) {
        OutputFormat::Json => {
            let value = json!({
                "l_plus": edge.l_plus,
                "m1": edge.double_root_m[0].re,
                "mN": edge.double_root_m[1].re,
                "method": edge.method,
                "certified_window": edge.certified_window,
            });
            emit(&a.common, stdout, |w| write_json(w, &value, p))
        }
        OutputFormat::Csv => emit(&a.common, stdout, |w| {
            writeln!(w, "l_plus,m1,mN,method,certified_window")?;
            writeln!(
                w,
                "{},{},{},{},{}",
                fmt_sig(edge.l_plus, p),
                fmt_sig(edge.double_root_m[0].re, p),
                fmt_sig(edge.double_root_m[1].re, p),
                method_name(edge.method),
                fmt_sig(edge.certified_window, p)
            )
        }),
    }
}

fn method_name(method: EdgeMethod) -> &'static str {
    match method {
        EdgeMethod::Discriminant => "discriminant",
        EdgeMethod::DensitySupportScan => "density_support_scan",
    }
}

fn cmd_predict(a: ModelCommand, stdout: &mut dyn Write) -> Result<()> {
    let spec = a.model.resolve()?.spec;
    let pred = predict_outlier(&spec, spec.lambda)?;
    let p = a.common.precision;
    match a.common.format.unwrap_or(OutputFormat::Json) {
        OutputFormat::Json => emit(&a.common, stdout, |w| write_json(w, &pred, p)),
        OutputFormat::Csv => emit(&a.common, stdout, |w| {
            writeln!(w, "lambda,lambda_c,l_plus,z,gap,method,marginal")?;
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                fmt_sig(pred.lambda, p),
                fmt_sig(pred.lambda_c, p),
                fmt_sig(pred.l_plus, p),
                fmt_opt(pred.z, p),
                fmt_opt(pred.gap, p),
                method_name(pred.method),
                pred.marginal
            )
        }),
    }
}

fn cmd_threshold(a: ThresholdArgs, stdout: &mut dyn Write) -> Result<()> {
    let (name, value, w_c) = match a.which {
        ThresholdModel::Hidden => {
            let gamma = a.gamma.ok_or_else(|| missing("gamma", "hidden"))?;
            ("hidden", hidden_threshold(a.q, gamma, a.n)?, hidden_critical_w(a.q, gamma)?)
        }
        ThresholdModel::Unbalanced => ("unbalanced", unbalanced_threshold(a.q, a.n)?, unbalanced_critical_w(a.q)?),
    };
    let p = a.common.precision;
    match a.common.format.unwrap_or(OutputFormat::Csv) {
        OutputFormat::Csv => emit(&a.common, stdout, |w| writeln!(w, "{}", fmt_sig(value, p))),
        OutputFormat::Json => {
            let v = json!({ "model": name, "q": a.q, "n": a.n, "gamma": a.gamma, "threshold": value, "w_c": w_c });
            emit(&a.common, stdout, |w| write_json(w, &v, p))
        }
    }
}

fn report_format(common: &CommonArgs) -> ReportFormat {
    match common.format.unwrap_or(OutputFormat::Csv) {
        OutputFormat::Csv => ReportFormat::Csv,
        OutputFormat::Json => ReportFormat::Json,
    }
}

fn print_paths(stdout: &mut dyn Write, paths: &[PathBuf]) -> Result<()> {
    for p in paths {
        writeln!(stdout, "{}", p.display()).map_err(|e| Error::io("<stdout>", e))?;
    }
    Ok(())
}

fn cmd_histogram(a: HistogramArgs, stdout: &mut dyn Write) -> Result<()> {
    let resolved = a.model.resolve()?;
    a.model.require_n(&resolved)?;
    let config = ExperimentConfig {
        base: resolved.base,
        axis: match resolved.base {
            ExperimentBase::Sbm { .. } => SweepAxis::W,
            ExperimentBase::Gsbm { .. } => SweepAxis::Lambda,
        },
        sweep_values: Vec::new(),
        trials_per_point: 1,
        master_seed: a.common.seed,
        bins: a.bins,
        jobs: None,
    };
    let run = run_histogram(&config)?;
    let dir = a.common.out.clone().unwrap_or_else(|| PathBuf::from("."));
    let paths = emit_report(&Report::Histogram(&run), &dir, report_format(&a.common), a.common.precision)?;
    print_paths(stdout, &paths)
}

fn cmd_sweep(a: SweepArgs, stdout: &mut dyn Write) -> Result<()> {
    let resolved = a.model.resolve()?;
    a.model.require_n(&resolved)?;
    let axis = match a.axis {
        Some(AxisArg::W) => SweepAxis::W,
        Some(AxisArg::P) => SweepAxis::P,
        Some(AxisArg::Lambda) => SweepAxis::Lambda,
        None => match resolved.base {
            ExperimentBase::Sbm { .. } => SweepAxis::W,
            ExperimentBase::Gsbm { .. } => SweepAxis::Lambda,
        },
    };
    let config = ExperimentConfig {
        base: resolved.base,
        axis,
        sweep_values: a.values.clone(),
        trials_per_point: a.trials,
        master_seed: a.common.seed,
        bins: DEFAULT_BINS,
        jobs: a.jobs,
    };
    let table = run_transition_sweep(&config)?;
    let dir = a.common.out.clone().unwrap_or_else(|| PathBuf::from("."));
    let paths = emit_report(&Report::Sweep(&table), &dir, report_format(&a.common), a.common.precision)?;
    print_paths(stdout, &paths)
}

#[derive(Debug, Serialize)]
struct CheckLine {
    check: &'static str,
    holds: bool,
    value: f64,
    bound: f64,
}

fn cmd_check(a: ModelCommand, stdout: &mut dyn Write) -> Result<()> {
    let resolved = a.model.resolve()?;
    let n = a.model.require_n(&resolved)?;
    let spec = resolved.spec;
    let (m, h, u) = sample_point(&resolved, a.common.seed)?;
    let em = eigen_symmetric(&m, 1)?;
    let eh = eigen_symmetric(&h, n)?;
    let pred = predict_outlier(&spec, spec.lambda)?;
    let report = SpectralReport::new(&em, Some(&eh), Some(pred));
    let interlacing = check_interlacing(&report)?;
    let bounds = check_outlier_bounds(&report, spec.lambda)?;
    let nf = n as f64;
    let mut lines = vec![
        CheckLine {
            check: "interlacing",
            holds: interlacing.holds,
            value: interlacing.worst_margin,
            bound: -crate::spectra::INTERLACING_SLACK,
        },
        CheckLine {
            check: "outlier_bounds",
            holds: bounds.holds,
            value: bounds.lower_margin.min(bounds.upper_margin).min(bounds.rayleigh_margin),
            bound: -crate::spectra::INTERLACING_SLACK,
        },
        CheckLine {
            check: "eigen_residual",
            holds: em.max_residual.max(eh.max_residual) <= crate::spectra::EIGEN_RESIDUAL_TOL,
            value: em.max_residual.max(eh.max_residual),
            bound: crate::spectra::EIGEN_RESIDUAL_TOL,
        },
    ];
    let zs = [
        ("local_law_bulk", Complex64::new(1.0, 0.1)),
        ("local_law_edge", Complex64::new(pred.l_plus + 0.3, 1.0 / nf.sqrt())),
    ];
    for (name, z) in zs {
        let law = check_local_law_with(&eh, &spec, &u, z)?;
        lines.push(CheckLine {
            check: name,
            holds: !law.flagged,
            value: law.deviation,
            bound: law.threshold,
        });
    }
    if let (Some(z), true) = (pred.z, spec.lambda > 0.0) {
        let form = resolvent_quadratic_form_with(&eh, &u, z)?;
        let dev = (form + 1.0 / spec.lambda).abs();
        lines.push(CheckLine {
            check: "resolvent_equation",
            holds: dev < 5.0 / nf.sqrt(),
            value: dev,
            bound: 5.0 / nf.sqrt(),
        });
    }
    let all = lines.iter().all(|l| l.holds);
    let p = a.common.precision;
    match a.common.format.unwrap_or(OutputFormat::Json) {
        OutputFormat::Json => {
            let v = json!({
                "all_pass": all,
                "lambda1": report.lambda1(),
                "lambda2": report.lambda2(),
                "gap": report.gap,
                "prediction": pred,
                "checks": lines,
            });
            emit(&a.common, stdout, |w| write_json(w, &v, p))?
        }
        OutputFormat::Csv => emit(&a.common, stdout, |w| {
            writeln!(w, "check,holds,value,bound")?;
            for l in &lines {
                writeln!(w, "{},{},{},{}", l.check, l.holds, fmt_sig(l.value, p), fmt_sig(l.bound, p))?;
            }
            Ok(())
        })?,
    }
    if all {
        Ok(())
    } else {
        let failed: Vec<&str> = lines.iter().filter(|l| !l.holds).map(|l| l.check).collect();
        Err(Error::CheckFailed(failed.join(", ")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_str(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let mut full = vec!["gsbm"];
        full.extend_from_slice(args);
        let code = run(full, &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn threshold_prints_closed_form() {
        let (code, out, _) = run_str(&["threshold", "hidden", "--q", "0.2", "--gamma", "0.25", "--n", "2500"]);
        assert_eq!(code, 0);
        assert_eq!(out.trim(), "0.232");
        let (code, out, _) = run_str(&["threshold", "unbalanced", "--q", "0.2", "--n", "2500"]);
        assert_eq!(code, 0);
        assert!((out.trim().parse::<f64>().unwrap() - 0.216).abs() < 1e-12);
    }

    #[test]
    fn errors_are_single_json_lines() {
        let (code, _, err) = run_str(&["threshold", "hidden", "--q", "0.2", "--gamma", "1.5", "--n", "10"]);
        assert_eq!(code, EXIT_VALIDATION);
        assert_eq!(err.lines().count(), 1);
        let v: serde_json::Value = serde_json::from_str(err.trim()).unwrap();
        assert_eq!(v["code"], 1);
        assert!(v["message"].as_str().unwrap().contains("gamma"));
        let (code, _, err) = run_str(&["edge", "--bogus"]);
        assert_eq!(code, EXIT_VALIDATION);
        assert!(serde_json::from_str::<serde_json::Value>(err.trim()).is_ok());
    }

    #[test]
    fn help_lists_every_subcommand() {
        let text = help_text();
        for name in ["sample", "density", "edge", "predict", "threshold", "histogram", "sweep", "check"] {
            assert!(text.contains(&format!("===== {name} =====")));
        }
        let (code, out, _) = run_str(&["--help"]);
        assert_eq!(code, 0);
        assert!(out.contains("Usage"));
    }

    #[test]
    fn model_resolution() {
        let parse = |args: &[&str]| {
            let mut full = vec!["gsbm", "edge"];
            full.extend_from_slice(args);
            match Cli::try_parse_from(full).unwrap().command {
                Command::Edge(c) => c.model.resolve(),
                _ => unreachable!(),
            }
        };
        let r = parse(&["--model", "hidden", "--n", "2500", "--gamma", "0.25", "--q", "0.2", "--p", "0.25"]).unwrap();
        assert_eq!(r.spec.n, Some(2500));
        assert_eq!(r.spec.theta2, 0.0);
        assert!(parse(&["--model", "hidden", "--n", "100", "--q", "0.2"]).is_err());
        let r = parse(&["--gamma", "0.3", "--spike", "planted", "--lambda", "2"]).unwrap();
        assert_eq!(r.spec.lambda, 2.0);
        assert!(parse(&[]).is_err());
    }
}
