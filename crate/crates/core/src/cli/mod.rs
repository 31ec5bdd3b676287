//! The `sscor` command line tool.
//!
//! Exit codes: 0 success, 2 usage or input error, 3 estimation failure,
//! 4 internal invariant violation.

pub mod io;

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::correlation::{
    confidence_interval, moment_matrix, multivariate_matrix, pairwise_matrix, sscor_two_stage,
    CorrelationMatrixEstimate,
};
use crate::eigenmap::{self, InverseOptions, ShapeSpectrum, SignSpectrum, SUM_TOLERANCE};
use crate::elliptical::Family;
use crate::error::Error;
use crate::simulation::{figure_table, run_experiment, Estimator, ExperimentConfig, ScenarioKind};

use self::io::{fmt_f64, read_table_file, CiReport, EstimateReport, InputTable};

/// Environment variable holding the default worker count for `simulate`.
pub const THREADS_ENV: &str = "SSCOR_THREADS";

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CliError {
    Usage(String),
    Input(String),
    Estimation(String),
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Input(_) => 2,
            CliError::Estimation(_) => 3,
            CliError::Internal(_) => 4,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Input(m) => write!(f, "input error: {m}"),
            CliError::Estimation(m) => write!(f, "estimation failed: {m}"),
            CliError::Internal(m) => write!(f, "internal error: {m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidInput(_) | Error::DimensionMismatch { .. } => CliError::Input(e.to_string()),
            _ => CliError::Estimation(e.to_string()),
        }
    }
}

fn io_error(e: std::io::Error) -> CliError {
    CliError::Input(format!("I/O error: {e}"))
}

#[derive(Debug, Parser)]
#[command(name = "sscor", version, about = "Robust correlation estimation with spatial signs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate a correlation matrix from a CSV file.
    Estimate(EstimateArgs),
    /// Evaluate or invert the map between shape and SSCM eigenvalues.
    Eigenmap(EigenmapArgs),
    /// Run the Monte Carlo variance study.
    Simulate(SimulateArgs),
    /// Emit shape/SSCM eigenvalue pairs of an eigenvalue scenario.
    Figure(FigureArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Moment,
    Pairwise,
    Multivariate,
    TwoStage,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[arg(long, value_enum)]
    pub method: Method,
    /// CSV file, one observation per row, optional header row.
    #[arg(long)]
    pub input: PathBuf,
    /// Confidence level of a Wald interval (two-stage method, two variables).
    #[arg(long)]
    pub ci: Option<f64>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Direction {
    Forward,
    Inverse,
}

#[derive(Debug, Args)]
pub struct EigenmapArgs {
    #[arg(value_enum)]
    pub direction: Direction,
    /// Shape eigenvalues (forward), comma separated.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, conflicts_with = "deltas")]
    pub lambdas: Option<Vec<f64>>,
    /// SSCM eigenvalues (inverse), comma separated.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub deltas: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// normal, laplace or t<df> (t5, t10, ...).
    #[arg(long)]
    pub dist: String,
    #[arg(long)]
    pub p: usize,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub reps: usize,
    #[arg(long)]
    pub seed: u64,
    /// Worker threads; overrides the SSCOR_THREADS environment variable.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Comma separated subset of moment, pairwise, multivariate.
    #[arg(long, value_delimiter = ',', default_value = "moment,pairwise,multivariate")]
    pub estimators: Vec<String>,
    /// Print a human-readable table instead of CSV.
    #[arg(long)]
    pub table: bool,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FigureArgs {
    /// 1: equidistant eigenvalues, 2: one eigenvalue 5 times the rest.
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
    pub figure: u8,
    #[arg(long)]
    pub p: usize,
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 {
                stdout.write_all(text.as_bytes())
            } else {
                stderr.write_all(text.as_bytes())
            };
            return code;
        }
    };
    let result = match cli.command {
        Command::Estimate(a) => cmd_estimate(&a, stdout, stderr),
        Command::Eigenmap(a) => cmd_eigenmap(&a, stdout, stderr),
        Command::Simulate(a) => cmd_simulate(&a, stdout, stderr),
        Command::Figure(a) => cmd_figure(&a, stdout, stderr),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "sscor: {e}");
            e.exit_code()
        }
    }
}

fn check_output_path(path: &Path) -> Result<(), CliError> {
    let parent = path.parent().filter(|p| !p.as_os_str().is_empty());
    match parent {
        Some(dir) if !dir.is_dir() => Err(CliError::Input(format!(
            "output directory {} does not exist",
            dir.display()
        ))),
        _ => Ok(()),
    }
}

/// Runs `emit` against the output file, or stdout when no path is given.
fn with_output(
    path: Option<&Path>,
    stdout: &mut dyn Write,
    emit: impl FnOnce(&mut dyn Write) -> std::io::Result<()>,
) -> Result<(), CliError> {
    match path {
        Some(p) => {
            let file = File::create(p)
                .map_err(|e| CliError::Input(format!("cannot create {}: {e}", p.display())))?;
            let mut w = BufWriter::new(file);
            emit(&mut w).map_err(io_error)?;
            w.flush().map_err(io_error)
        }
        None => emit(stdout).map_err(io_error),
    }
}

fn rows_of(m: &crate::linalg::SymmetricMatrix) -> Vec<Vec<f64>> {
    m.to_rows()
}

/// Rewrites column indices in estimation errors into user-facing labels.
fn describe_estimation_error(e: Error, table: &InputTable) -> CliError {
    match e {
        Error::DegenerateScale { index: Some(i) } => CliError::Estimation(format!(
            "degenerate scale (zero MAD) in column {}",
            table.column_label(i)
        )),
        Error::Pair { i, j, source } => {
            let inner = describe_estimation_error(*source, table);
            let msg = match inner {
                CliError::Estimation(m) | CliError::Input(m) | CliError::Usage(m) | CliError::Internal(m) => m,
            };
            CliError::Estimation(format!(
                "columns {} and {}: {msg}",
                table.column_label(i),
                table.column_label(j)
            ))
        }
        other => CliError::from(other),
    }
}

fn check_correlation_invariants(est: &CorrelationMatrixEstimate) -> Result<(), CliError> {
    let m = &est.matrix;
    for i in 0..m.dim() {
        if m.get(i, i) != 1.0 {
            return Err(CliError::Internal(format!("diagonal entry {} is {}", i + 1, m.get(i, i))));
        }
        for j in 0..m.dim() {
            if !(m.get(i, j).abs() <= 1.0) {
                return Err(CliError::Internal(format!(
                    "entry ({}, {}) = {} outside [-1, 1]",
                    i + 1,
                    j + 1,
                    m.get(i, j)
                )));
            }
        }
    }
    Ok(())
}

pub fn cmd_estimate(args: &EstimateArgs, stdout: &mut dyn Write, _stderr: &mut dyn Write) -> Result<(), CliError> {
    if let Some(out) = &args.output {
        check_output_path(out)?;
    }
    if let Some(level) = args.ci {
        if args.method != Method::TwoStage {
            return Err(CliError::Usage("--ci is only available with --method two-stage".into()));
        }
        if !(level > 0.0 && level < 1.0) {
            return Err(CliError::Usage(format!("--ci must lie in (0, 1), got {level}")));
        }
    }
    let table = read_table_file(&args.input)?;
    let data = &table.data;
    let describe = |e: Error| describe_estimation_error(e, &table);

    let (method_name, est, ci) = match args.method {
        Method::Moment => ("moment", moment_matrix(data).map_err(describe)?, None),
        Method::Pairwise => ("pairwise", pairwise_matrix(data).map_err(describe)?, None),
        Method::Multivariate => ("multivariate", multivariate_matrix(data).map_err(describe)?, None),
        Method::TwoStage => {
            if data.p() != 2 {
                return Err(CliError::Usage(format!(
                    "two-stage estimation needs exactly 2 columns, input has {}",
                    data.p()
                )));
            }
            let est = sscor_two_stage(data).map_err(describe)?;
            let ci = match args.ci {
                Some(level) => Some(confidence_interval(&est, level)?),
                None => None,
            };
            let matrix = crate::linalg::SymmetricMatrix::from_fn(2, |i, j| if i == j { 1.0 } else { est.rho });
            let wrapped = CorrelationMatrixEstimate {
                matrix,
                method: crate::correlation::MatrixMethod::Pairwise,
                shape: None,
                lambdas: None,
            };
            ("two-stage", wrapped, ci)
        }
    };
    check_correlation_invariants(&est)?;

    let report = EstimateReport {
        method: method_name.to_string(),
        p: data.p(),
        n: data.n(),
        correlation: rows_of(&est.matrix),
        shape: est.shape.as_ref().map(rows_of),
        lambdas: est.lambdas.clone(),
        ci: ci.map(|c| CiReport {
            lower: c.lower,
            upper: c.upper,
            level: c.level,
        }),
    };
    with_output(args.output.as_deref(), stdout, |w| match args.format {
        Format::Csv => report.write_csv(w),
        Format::Json => report.write_json(w),
    })
}

/// Validates user-supplied eigenvalues and rescales them to sum 1, warning
/// when the rescaling is more than rounding noise.
fn spectrum_values(values: &[f64], stderr: &mut dyn Write) -> Result<Vec<f64>, CliError> {
    if values.len() < 2 {
        return Err(CliError::Usage("at least 2 eigenvalues are required".into()));
    }
    if let Some(v) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
        return Err(CliError::Usage(format!("eigenvalues must be finite and nonnegative, got {v}")));
    }
    let sum: f64 = values.iter().sum();
    if !(sum > 0.0) {
        return Err(CliError::Usage("eigenvalues must not all be zero".into()));
    }
    if (sum - 1.0).abs() > SUM_TOLERANCE {
        let _ = writeln!(stderr, "warning: eigenvalues sum to {sum}; rescaling to sum 1");
    }
    Ok(values.iter().map(|v| v / sum).collect())
}

pub fn cmd_eigenmap(args: &EigenmapArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), CliError> {
    let (lambda, delta) = match args.direction {
        Direction::Forward => {
            let values = args
                .lambdas
                .as_ref()
                .ok_or_else(|| CliError::Usage("forward needs --lambdas".into()))?;
            let lambda = ShapeSpectrum::new(spectrum_values(values, stderr)?)?;
            let delta = eigenmap::forward(&lambda)?;
            (lambda, delta)
        }
        Direction::Inverse => {
            let values = args
                .deltas
                .as_ref()
                .ok_or_else(|| CliError::Usage("inverse needs --deltas".into()))?;
            let delta = SignSpectrum::new(spectrum_values(values, stderr)?)?;
            let fit = eigenmap::inverse_with(&delta, InverseOptions::default())?;
            let residual = eigenmap::forward(&fit.spectrum)?.max_abs_diff(&delta);
            let _ = writeln!(
                stderr,
                "iterations: {}, last change: {:e}, residual: {:e}",
                fit.iterations, fit.change, residual
            );
            (fit.spectrum, delta)
        }
    };
    let emit = |w: &mut dyn Write| -> std::io::Result<()> {
        writeln!(w, "index,lambda,delta")?;
        for (i, (l, d)) in lambda.values().iter().zip(delta.values()).enumerate() {
            writeln!(w, "{},{},{}", i + 1, fmt_f64(*l), fmt_f64(*d))?;
        }
        Ok(())
    };
    emit(stdout).map_err(io_error)
}

fn resolve_threads(flag: Option<usize>) -> Result<Option<usize>, CliError> {
    if let Some(t) = flag {
        return if t == 0 {
            Err(CliError::Usage("--threads must be at least 1".into()))
        } else {
            Ok(Some(t))
        };
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(t) if t > 0 => Ok(Some(t)),
            _ => Err(CliError::Usage(format!("{THREADS_ENV} must be a positive integer, got '{v}'"))),
        },
        Err(_) => Ok(None),
    }
}

pub fn cmd_simulate(args: &SimulateArgs, stdout: &mut dyn Write, _stderr: &mut dyn Write) -> Result<(), CliError> {
    if let Some(out) = &args.output {
        check_output_path(out)?;
    }
    let family: Family = args.dist.parse().map_err(|e: Error| CliError::Usage(e.to_string()))?;
    let estimators = args
        .estimators
        .iter()
        .map(|s| s.parse::<Estimator>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let cfg = ExperimentConfig {
        family,
        p: args.p,
        n: args.n,
        reps: args.reps,
        seed: args.seed,
        estimators,
    };
    cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;

    let threads = resolve_threads(args.threads)?;
    let result = match threads {
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| CliError::Internal(format!("cannot start worker pool: {e}")))?;
            pool.install(|| run_experiment(&cfg))
        }
        None => run_experiment(&cfg),
    }?;

    with_output(args.output.as_deref(), stdout, |w| {
        if args.table {
            result.write_table(w)
        } else {
            result.write_csv(w, true)
        }
    })
}

pub fn cmd_figure(args: &FigureArgs, stdout: &mut dyn Write, _stderr: &mut dyn Write) -> Result<(), CliError> {
    let kind = if args.figure == 1 {
        ScenarioKind::Equidistant
    } else {
        ScenarioKind::Spiked
    };
    if args.p < 2 {
        return Err(CliError::Usage(format!("--p must be at least 2, got {}", args.p)));
    }
    let rows = figure_table(kind, args.p)?;
    let mut emit = || -> std::io::Result<()> {
        writeln!(stdout, "index,lambda,delta")?;
        for r in &rows {
            writeln!(stdout, "{},{},{}", r.index, fmt_f64(r.lambda), fmt_f64(r.delta))?;
        }
        Ok(())
    };
    emit().map_err(io_error)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_capture(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let mut argv = vec!["sscor"];
        argv.extend_from_slice(args);
        let code = run(argv, &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    fn parse_columns(text: &str) -> Vec<Vec<f64>> {
        text.lines()
            .skip(1)
            .map(|l| l.split(',').skip(1).map(|v| v.parse().unwrap()).collect())
            .collect()
    }

    #[test]
    fn forward_closed_form() {
        let (code, out, _) = run_capture(&["eigenmap", "forward", "--lambdas", "0.8,0.2"]);
        assert_eq!(code, 0);
        let rows = parse_columns(&out);
        assert!((rows[0][1] - 2.0 / 3.0).abs() < 1e-10);
        assert!((rows[1][1] - 1.0 / 3.0).abs() < 1e-10);
    }

    #[test]
    fn inverse_closed_form() {
        let (code, out, err) = run_capture(&["eigenmap", "inverse", "--deltas", "0.666667,0.333333"]);
        assert_eq!(code, 0);
        let rows = parse_columns(&out);
        assert!((rows[0][0] - 0.8).abs() < 1e-5);
        assert!((rows[1][0] - 0.2).abs() < 1e-5);
        assert!(err.contains("iterations:"));
    }

    #[test]
    fn forward_spherical() {
        let (code, out, _) = run_capture(&["eigenmap", "forward", "--lambdas", "0.25,0.25,0.25,0.25"]);
        assert_eq!(code, 0);
        for row in parse_columns(&out) {
            assert!((row[1] - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn eigenmap_input_errors() {
        let (code, _, _) = run_capture(&["eigenmap", "forward", "--lambdas", "0.5,-0.5,1"]);
        assert_eq!(code, 2);
        let (code, _, _) = run_capture(&["eigenmap", "forward", "--deltas", "0.5,0.5"]);
        assert_eq!(code, 2);
        let (code, _, err) = run_capture(&["eigenmap", "forward", "--lambdas", "4,1"]);
        assert_eq!(code, 0);
        assert!(err.contains("warning"));
        let (code, _, _) = run_capture(&["eigenmap", "inverse", "--deltas", "1,0,0"]);
        assert_eq!(code, 3);
    }

    #[test]
    fn figure_tables() {
        let (code, out, _) = run_capture(&["figure", "--figure", "1", "--p", "3"]);
        assert_eq!(code, 0);
        let rows = parse_columns(&out);
        assert_eq!(rows.len(), 3);
        assert!((rows[0][0] - 0.5).abs() < 1e-15);
        assert!((rows[2][0] - 1.0 / 6.0).abs() < 1e-15);
        let (_, out, _) = run_capture(&["figure", "--figure", "2", "--p", "3"]);
        let rows = parse_columns(&out);
        assert!((rows[0][0] / rows[1][0] - 5.0).abs() < 1e-12);
        assert!(rows.windows(2).all(|w| w[0][1] >= w[1][1]));
        let (code, _, _) = run_capture(&["figure", "--figure", "3", "--p", "3"]);
        assert_eq!(code, 2);
    }

    #[test]
    fn simulate_rejects_single_replication() {
        let (code, _, err) = run_capture(&[
            "simulate", "--dist", "normal", "--p", "2", "--n", "100", "--reps", "1", "--seed", "1",
        ]);
        assert_eq!(code, 2, "{err}");
        let (code, _, _) = run_capture(&[
            "simulate", "--dist", "cauchy", "--p", "2", "--n", "100", "--reps", "10", "--seed", "1",
        ]);
        assert_eq!(code, 2);
    }

    #[test]
    fn error_mapping() {
        assert_eq!(CliError::from(Error::InvalidInput("x".into())).exit_code(), 2);
        assert_eq!(CliError::from(Error::RankDeficient { nonzero: 1 }).exit_code(), 3);
        assert_eq!(CliError::Internal("x".into()).exit_code(), 4);
    }
}
