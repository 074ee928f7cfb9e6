//! Command-line pipeline over `vertexforge`: forward and inverse maps,
//! example matrices, finite-graph synthesis, sweeps and validation.
//!
//! Every stage reads and writes files so intermediate artifacts can be
//! inspected. Indices in all files are 0-based.

use std::fmt;
use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use vertexforge::coupling::{inspect, scattering_closed_form};
use vertexforge::equalscatter::{
    check_d_bound, classify_equal_transmission, conference_scattering, hadamard_scattering,
};
use vertexforge::inverse::recover_t;
use vertexforge::matrix::{DEFAULT_EQ_TOL, DEFAULT_RANK_TOL};
use vertexforge::simulator::{momentum_grid, sweep, SweepResult};
use vertexforge::synthesis::design_from_coupling;
use vertexforge::{
    ComplexMatrix, FiniteGraphDesign, ScaleInvariantCoupling, ScatteringMatrix, Tolerance,
};

pub const EXIT_OK: u8 = 0;
pub const EXIT_FAILURE: u8 = 1;
pub const EXIT_USAGE: u8 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "vertexforge",
    version,
    about = "Scale-invariant vertex couplings: inversion, synthesis and simulation"
)]
pub struct CommandConfig {
    #[command(subcommand)]
    pub command: Command,

    /// Input JSON file (standard input when omitted)
    #[arg(long, global = true)]
    pub input: Option<PathBuf>,

    /// Output file (standard output when omitted)
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,

    /// Relative rank threshold
    #[arg(long, global = true)]
    pub tol_rank: Option<f64>,

    /// Absolute tolerance for Hermiticity, unitarity and agreement checks
    #[arg(long, global = true, env = "VERTEXFORGE_TOL_EQ")]
    pub tol_eq: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Coupling JSON to scattering matrix JSON
    Forward,
    /// Scattering matrix JSON to {permutation, coupling}
    Invert,
    /// Emit an equal-transmission scattering matrix
    Examples(ExampleArgs),
    /// Coupling JSON to finite-graph design JSON
    Synthesize(SynthesizeArgs),
    /// Sweep a design over momentum and write CSV
    Simulate(SimulateArgs),
    /// Validation report for matrix or coupling JSON
    Verify,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Family {
    Conference,
    Hadamard,
}

#[derive(Debug, Args)]
pub struct ExampleArgs {
    #[arg(long, value_enum)]
    pub family: Family,
    #[arg(long)]
    pub n: usize,
}

#[derive(Debug, Args)]
pub struct SynthesizeArgs {
    /// Length scale d of the synthesized graph
    #[arg(long, default_value_t = 1.0)]
    pub length_unit: f64,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub kmin: f64,
    #[arg(long)]
    pub kmax: f64,
    #[arg(long)]
    pub steps: usize,
    /// Matrix or coupling JSON to compare against
    #[arg(long)]
    pub target: Option<PathBuf>,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Failure(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Failure(_) => EXIT_FAILURE,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "usage error: {msg}"),
            CliError::Failure(msg) => write!(f, "{msg}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<vertexforge::Error> for CliError {
    fn from(e: vertexforge::Error) -> Self {
        CliError::Failure(e.to_string())
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Outcome of a successful run; `verify` on an invalid input still writes
/// its report but exits with status 1.
pub fn run(config: &CommandConfig) -> CliResult<u8> {
    let tol = tolerance(config)?;
    validate_params(&config.command)?;
    match &config.command {
        Command::Forward => {
            let c: ScaleInvariantCoupling = read_json(config.input.as_deref())?;
            let s = scattering_closed_form(&c, &tol)?;
            write_json(config.output.as_deref(), &s)?;
        }
        Command::Invert => {
            let s = read_scattering(config.input.as_deref(), &tol)?;
            let r = recover_t(&s, &tol)?;
            write_json(config.output.as_deref(), &r)?;
        }
        Command::Examples(args) => {
            let s = match args.family {
                Family::Conference => conference_scattering(args.n)?,
                Family::Hadamard => hadamard_scattering(args.n)?,
            };
            write_json(config.output.as_deref(), &s)?;
        }
        Command::Synthesize(args) => {
            let c: ScaleInvariantCoupling = read_json(config.input.as_deref())?;
            let design = design_from_coupling(&c, args.length_unit, &tol)?;
            write_json(config.output.as_deref(), &design)?;
        }
        Command::Simulate(args) => {
            let design: FiniteGraphDesign = read_json(config.input.as_deref())?;
            let target = match &args.target {
                Some(path) => Some(read_scattering(Some(path), &tol)?),
                None => None,
            };
            let result = sweep(
                &design,
                target.as_ref(),
                args.kmin,
                args.kmax,
                args.steps,
                &tol,
            )?;
            write_sweep(config.output.as_deref(), &design, &result)?;
        }
        Command::Verify => {
            let (report, valid) = verify(config.input.as_deref(), &tol)?;
            write_json(config.output.as_deref(), &report)?;
            if !valid {
                return Ok(EXIT_FAILURE);
            }
        }
    }
    Ok(EXIT_OK)
}

fn tolerance(config: &CommandConfig) -> CliResult<Tolerance> {
    Tolerance::new(
        config.tol_rank.unwrap_or(DEFAULT_RANK_TOL),
        config.tol_eq.unwrap_or(DEFAULT_EQ_TOL),
    )
    .map_err(|e| CliError::Usage(e.to_string()))
}

fn validate_params(command: &Command) -> CliResult<()> {
    match command {
        Command::Synthesize(args) if !(args.length_unit.is_finite() && args.length_unit > 0.0) => {
            Err(CliError::Usage(format!(
                "--length-unit must be positive and finite, got {}",
                args.length_unit
            )))
        }
        Command::Simulate(args) => momentum_grid(args.kmin, args.kmax, args.steps)
            .map(|_| ())
            .map_err(|e| CliError::Usage(e.to_string())),
        _ => Ok(()),
    }
}

fn source_name(path: Option<&Path>) -> String {
    path.map(|p| p.display().to_string())
        .unwrap_or_else(|| "<stdin>".into())
}

fn read_text(path: Option<&Path>) -> CliResult<String> {
    let mut text = String::new();
    let outcome = match path {
        Some(p) => fs::read_to_string(p).map(|t| text = t),
        None => io::stdin().read_to_string(&mut text).map(|_| ()),
    };
    outcome.map_err(|e| CliError::Failure(format!("{}: {e}", source_name(path))))?;
    Ok(text)
}

/// Byte offset of a 1-based line/column position reported by the parser.
fn byte_offset(text: &str, line: usize, column: usize) -> usize {
    let line_start: usize = text
        .split_inclusive('\n')
        .take(line.saturating_sub(1))
        .map(str::len)
        .sum();
    line_start + column.saturating_sub(1)
}

fn parse_json<T: serde::de::DeserializeOwned>(text: &str, source: &str) -> CliResult<T> {
    serde_json::from_str(text).map_err(|e| {
        let offset = byte_offset(text, e.line(), e.column());
        CliError::Failure(format!("{source}: byte {offset}: {e}"))
    })
}

fn read_json<T: serde::de::DeserializeOwned>(path: Option<&Path>) -> CliResult<T> {
    let text = read_text(path)?;
    parse_json(&text, &source_name(path))
}

enum Loaded {
    Coupling(ScaleInvariantCoupling),
    Matrix(ComplexMatrix),
}

/// Matrix JSON, or coupling JSON (recognised by its `T` key).
fn read_loaded(path: Option<&Path>) -> CliResult<Loaded> {
    let text = read_text(path)?;
    let source = source_name(path);
    let value: Value = parse_json(&text, &source)?;
    if value.get("T").is_some() {
        parse_json(&text, &source).map(Loaded::Coupling)
    } else {
        parse_json(&text, &source).map(Loaded::Matrix)
    }
}

fn read_scattering(path: Option<&Path>, tol: &Tolerance) -> CliResult<ScatteringMatrix> {
    match read_loaded(path)? {
        Loaded::Coupling(c) => Ok(scattering_closed_form(&c, tol)?),
        Loaded::Matrix(m) => Ok(ScatteringMatrix::new(m, tol)?),
    }
}

fn verify(path: Option<&Path>, tol: &Tolerance) -> CliResult<(Value, bool)> {
    let (input, matrix) = match read_loaded(path)? {
        Loaded::Coupling(c) => ("coupling", scattering_closed_form(&c, tol)?.into_matrix()),
        Loaded::Matrix(m) => ("matrix", m),
    };
    let report = inspect(&matrix, tol)?;
    let mut valid = report.is_valid();
    let n = report.n;
    let parametrizable = report.m.is_some_and(|m| m > 0 && m < n);

    let classification = if valid {
        ScatteringMatrix::new(matrix, tol)
            .ok()
            .and_then(|s| classify_equal_transmission(&s, tol))
    } else {
        None
    };
    let d_bound = classification.map(|spec| {
        let ok = check_d_bound(&spec, tol.eq_tol);
        valid &= ok;
        json!({ "upper_bound": spec.d_upper_bound(), "satisfied": ok })
    });

    let out = json!({
        "input": input,
        "valid": valid,
        "n": n,
        "hermitian_residual": report.hermitian_residual,
        "unitary_residual": report.unitary_residual,
        "involution_residual": report.involution_residual,
        "hermitian": report.hermitian,
        "unitary": report.unitary,
        "involutive": report.involutive,
        "m": report.m,
        "minus_multiplicity": report.minus_multiplicity,
        "parametrizable": parametrizable,
        "equal_transmission": classification,
        "d_bound": d_bound,
    });
    Ok((out, valid))
}

fn open_output(path: Option<&Path>) -> CliResult<Box<dyn Write>> {
    match path {
        Some(p) => fs::File::create(p)
            .map(|f| Box::new(io::BufWriter::new(f)) as Box<dyn Write>)
            .map_err(|e| CliError::Failure(format!("{}: {e}", p.display()))),
        None => Ok(Box::new(io::stdout().lock())),
    }
}

fn io_failure(path: Option<&Path>) -> impl Fn(io::Error) -> CliError + '_ {
    move |e| {
        CliError::Failure(format!(
            "{}: {e}",
            path.map(|p| p.display().to_string())
                .unwrap_or_else(|| "<stdout>".into())
        ))
    }
}

fn write_json<T: serde::Serialize>(path: Option<&Path>, value: &T) -> CliResult<()> {
    let mut out = open_output(path)?;
    serde_json::to_writer_pretty(&mut out, value).map_err(|e| CliError::Failure(e.to_string()))?;
    writeln!(out)
        .and_then(|_| out.flush())
        .map_err(io_failure(path))
}

/// Sidecar path for skipped points: `<output>.skipped.json`.
pub fn skipped_path(output: &Path) -> PathBuf {
    let mut name = output.as_os_str().to_owned();
    name.push(".skipped.json");
    PathBuf::from(name)
}

fn write_sweep(
    path: Option<&Path>,
    design: &FiniteGraphDesign,
    result: &SweepResult,
) -> CliResult<()> {
    let mut out = open_output(path)?;
    result
        .write_csv(design.n(), &mut out)
        .and_then(|_| out.flush())
        .map_err(io_failure(path))?;
    let mut skipped = result.skipped_json();
    skipped["design_hash"] = json!(result.design_hash);
    match path {
        Some(p) => {
            let side = skipped_path(p);
            write_json(Some(&side), &skipped)
        }
        None => {
            eprintln!("{skipped}");
            Ok(())
        }
    }
}
