//! Command-line experiment runner over `gapscope-core`.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use gapscope_core::GapError;
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

pub mod cmd;
pub mod output;

pub use output::{csv_body_of, Assertion, Format, Report, Table};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),

    #[error("config: {0}")]
    Config(#[from] serde_json::Error),

    #[error(transparent)]
    Core(#[from] GapError),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    /// Runs that could not start or finish report 2; bound violations are
    /// reported through assertions instead.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(GapError::BoundViolated { .. } | GapError::CertificateFailure { .. }) => 1,
            _ => 2,
        }
    }
}

pub fn usage<T>(msg: impl Into<String>) -> Result<T, CliError> {
    Err(CliError::Usage(msg.into()))
}

#[derive(Debug, Parser)]
#[command(name = "gapscope", version, about = "Nearest-neighbor distance spectra of isometry orbits")]
pub struct Cli {
    /// Seed for every random choice in the run.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Worker threads; defaults to the number of CPUs.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Directory for tables, the resolved config and counterexamples.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,

    /// JSON file holding the subcommand parameters; replaces its flags.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Gap and NND counts of circle rotation orbits.
    ThreeGap(cmd::three_gap::ThreeGapArgs),
    /// Exact many-gaps certificates on flat tori.
    TorusGaps(cmd::torus_gaps::TorusGapsArgs),
    /// Exact self-intersections of a flat Klein bottle geodesic.
    Klein(cmd::klein::KleinArgs),
    /// NND spectra of transvection orbits in model spaces.
    OrbitNnd(cmd::orbit::OrbitArgs),
    /// Greedy maximal packings of balls.
    Packing(cmd::packing::PackingArgs),
    /// NND growth of sampled geodesics on a surface.
    GeoScan(cmd::geo::GeoScanArgs),
    /// Finite-difference second derivatives at self-intersections.
    DerivativeCheck(cmd::geo::DerivativeArgs),
    /// Conjugate points along a surface geodesic.
    Conjugate(cmd::geo::ConjugateArgs),
}

/// Settings shared by every subcommand.
#[derive(Debug, Clone, Copy)]
pub struct Ctx {
    pub seed: u64,
}

fn resolve<T: DeserializeOwned + Serialize>(flags: T, config: Option<&Path>) -> Result<T, CliError> {
    match config {
        None => Ok(flags),
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
            Ok(serde_json::from_str(&text)?)
        }
    }
}

fn execute<T, F>(name: &'static str, flags: T, cli: &Cli, f: F) -> Result<(&'static str, Value, Report), CliError>
where
    T: DeserializeOwned + Serialize,
    F: FnOnce(&T, Ctx) -> Result<Report, CliError>,
{
    let params = resolve(flags, cli.config.as_deref())?;
    let config = json!({ "command": name, "seed": cli.seed, "params": params });
    let report = f(&params, Ctx { seed: cli.seed })?;
    Ok((name, config, report))
}

fn dispatch(cli: Cli) -> Result<(&'static str, Value, Report), CliError> {
    use cmd::*;
    match &cli.command {
        Command::ThreeGap(a) => execute("three-gap", a.clone(), &cli, three_gap::run),
        Command::TorusGaps(a) => execute("torus-gaps", a.clone(), &cli, torus_gaps::run),
        Command::Klein(a) => execute("klein", a.clone(), &cli, klein::run),
        Command::OrbitNnd(a) => execute("orbit-nnd", a.clone(), &cli, orbit::run),
        Command::Packing(a) => execute("packing", a.clone(), &cli, packing::run),
        Command::GeoScan(a) => execute("geo-scan", a.clone(), &cli, geo::run_scan),
        Command::DerivativeCheck(a) => execute("derivative-check", a.clone(), &cli, geo::run_derivative),
        Command::Conjugate(a) => execute("conjugate", a.clone(), &cli, geo::run_conjugate),
    }
}

/// Parses `args` (program name first), runs the experiment and returns the
/// exit code: 0 when every assertion holds, 1 on a violated bound, 2 on a
/// usage, schema or runtime error.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let sink: &mut dyn Write = if code == 0 { out } else { err };
            let _ = write!(sink, "{}", e.render());
            return code;
        }
    };
    let (format, dir) = (cli.format, cli.out.clone());
    let result = match cli.threads {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| dispatch(cli)),
            Err(e) => Err(CliError::Usage(format!("thread pool: {e}"))),
        },
        None => dispatch(cli),
    };
    let (name, config, report) = match result {
        Ok(r) => r,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return e.exit_code();
        }
    };
    let lines = match output::emit(name, &config, &report, format, dir.as_deref(), out) {
        Ok(lines) => lines,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return e.exit_code();
        }
    };
    // summaries go wherever the data does not
    let summary: &mut dyn Write = if dir.is_some() { out } else { err };
    for line in lines {
        let _ = writeln!(summary, "{line}");
    }
    if report.passed() {
        0
    } else {
        1
    }
}
