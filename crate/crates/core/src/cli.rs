//! The `asiaudit` command line.
//!
//! Exit codes: 0 success, 1 usage, 2 data error, 3 a diagnosis was written
//! but at least one panel had a single-signed rest. Problems go to stderr
//! as JSON lines; `ASIAUDIT_LOG` (debug, info, warn, error, off) sets the
//! lowest severity shown, warn by default.

use crate::diag::{self, AsiDiagnostic, DiagError};
use crate::diagnostics::{Code, Diagnostic, Severity};
use crate::panel::{self, Panel, PanelError, SchemaMode};
use crate::prep::{self, PrepConfig, PrepError, Removal, ScaleBase};
use crate::report::{self, Format, Report};
use crate::synth::{self, RestMode, SimulationConfig, SynthError};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;
use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_DEGENERATE: i32 = 3;

pub const LOG_ENV: &str = "ASIAUDIT_LOG";

#[derive(Debug, Parser)]
#[command(name = "asiaudit", version, about = "Audit investment-cash flow regressions for accounting semi-identity bias")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit restricted and unrestricted models and write a report.
    Diagnose(DiagnoseArgs),
    /// Generate a synthetic flow-mode panel.
    Simulate(SimulateArgs),
    /// Render one or more reports as a table.
    Table(TableArgs),
    /// Scan a panel for identity violations only.
    Check(CheckArgs),
}

#[derive(Debug, Args)]
struct PanelArgs {
    #[arg(long, default_value_t = SchemaMode::Flow)]
    schema: SchemaMode,
    #[arg(long, default_value_t = prep::DEFAULT_IDENTITY_TOLERANCE)]
    identity_tolerance: f64,
}

#[derive(Debug, Args)]
struct DiagnoseArgs {
    /// Panel CSV; repeat for several panels.
    #[arg(long, required = true)]
    input: Vec<PathBuf>,
    #[command(flatten)]
    panel: PanelArgs,
    #[arg(long, default_value_t = ScaleBase::LaggedTotalAssets)]
    scale: ScaleBase,
    #[arg(long, default_value_t = prep::DEFAULT_TRIM_FRACTION)]
    trim: f64,
    /// Report JSON path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the removal report (CSV) here.
    #[arg(long)]
    removals: Option<PathBuf>,
    /// Panels diagnosed concurrently.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// JSON config; excludes the generator flags.
    #[arg(long, conflicts_with_all = ["firms", "years", "rest_mode", "seed"])]
    config: Option<PathBuf>,
    #[arg(long, required_unless_present = "config")]
    firms: Option<usize>,
    #[arg(long, required_unless_present = "config")]
    years: Option<usize>,
    #[arg(long, required_unless_present = "config")]
    rest_mode: Option<RestMode>,
    #[arg(long, required_unless_present = "config")]
    seed: Option<u64>,
    #[arg(long, conflicts_with = "config")]
    rest_scale: Option<f64>,
    #[arg(long, conflicts_with = "config")]
    mix_fraction: Option<f64>,
    #[arg(long, conflicts_with = "config")]
    cf_location: Option<f64>,
    #[arg(long, conflicts_with = "config")]
    cf_spread: Option<f64>,
    #[arg(long, conflicts_with = "config")]
    base_assets: Option<f64>,
    #[arg(long, conflicts_with = "config")]
    start_year: Option<i32>,
    /// Panel CSV path; stdout when absent. A `<out>.meta.json` sidecar
    /// records the config and generation time.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct TableArgs {
    /// Report JSON files, rendered in the order given.
    #[arg(long, required = true, num_args = 1..)]
    inputs: Vec<PathBuf>,
    #[arg(long, default_value_t = Format::Text)]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CheckArgs {
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    panel: PanelArgs,
}

/// A failed command: its exit code and what to report.
struct Failure {
    code: i32,
    diagnostics: Vec<Diagnostic>,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self::new(EXIT_USAGE, Diagnostic::new(Code::Usage, message))
    }

    fn data(diagnostic: Diagnostic) -> Self {
        Self::new(EXIT_DATA, diagnostic)
    }

    fn io(path: &Path, e: io::Error) -> Self {
        Self::new(EXIT_DATA, Diagnostic::new(Code::Io, format!("{}: {e}", path.display())))
    }

    fn new(code: i32, diagnostic: Diagnostic) -> Self {
        Self {
            code,
            diagnostics: vec![diagnostic],
        }
    }
}

impl From<PanelError> for Failure {
    fn from(e: PanelError) -> Self {
        Failure::data(e.diagnostic())
    }
}

impl From<PrepError> for Failure {
    fn from(e: PrepError) -> Self {
        match e {
            PrepError::InvalidConfig(_) => Failure::usage(e.to_string()),
            PrepError::Panel(p) => p.into(),
            other => Failure::data(Diagnostic::new(Code::DataError, other.to_string())),
        }
    }
}

impl From<DiagError> for Failure {
    fn from(e: DiagError) -> Self {
        match e {
            DiagError::Prep(p) => p.into(),
            other => Failure::data(Diagnostic::new(Code::DataError, other.to_string())),
        }
    }
}

impl From<SynthError> for Failure {
    fn from(e: SynthError) -> Self {
        match e {
            SynthError::Config(_) => Failure::usage(e.to_string()),
            SynthError::Prep(p) => p.into(),
            SynthError::Panel(p) => p.into(),
            other => Failure::data(Diagnostic::new(Code::DataError, other.to_string())),
        }
    }
}

fn log_threshold() -> Option<Severity> {
    match std::env::var(LOG_ENV).as_deref().map(str::to_ascii_lowercase).as_deref() {
        Ok("debug") => Some(Severity::Debug),
        Ok("info") => Some(Severity::Info),
        Ok("error") => Some(Severity::Error),
        Ok("off") => None,
        _ => Some(Severity::Warn),
    }
}

fn emit(diagnostics: &[Diagnostic]) {
    let Some(threshold) = log_threshold() else {
        return;
    };
    let stderr = io::stderr();
    let lock = stderr.lock();
    let shown = diagnostics.iter().filter(|d| d.severity() >= threshold);
    // A closed stderr is not worth failing over.
    let _ = crate::diagnostics::write_json_lines(io::BufWriter::new(lock), shown);
}

fn write_output(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| Failure::io(p, e)),
        None => {
            let mut out = io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| Failure::io(Path::new("<stdout>"), e))
        }
    }
}

/// Runs the CLI on `args` (program name first) and returns the exit code.
pub fn cli_main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return EXIT_OK;
            }
            emit(&[Diagnostic::new(Code::Usage, e.render().to_string().trim_end())]);
            return EXIT_USAGE;
        }
    };
    let result = match cli.command {
        Command::Diagnose(a) => run_diagnose(a),
        Command::Simulate(a) => run_simulate(a),
        Command::Table(a) => run_table(a),
        Command::Check(a) => run_check(a),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            emit(&f.diagnostics);
            f.code
        }
    }
}

struct PanelRun {
    diagnostic: AsiDiagnostic,
    removals: Vec<Removal>,
}

fn diagnose_file(path: &Path, schema: SchemaMode, config: &PrepConfig) -> Result<PanelRun, Failure> {
    let panel = panel::ingest_csv(path, schema)?;
    let run = diag::diagnose_detailed(&panel, config)?;
    emit(&run.warnings);
    Ok(PanelRun {
        diagnostic: run.diagnostic,
        removals: run.removals,
    })
}

#[derive(Serialize)]
struct RemovalRow<'a> {
    panel: &'a str,
    firm_id: &'a str,
    year: i32,
    reason: prep::RemovalReason,
}

fn write_removals(path: &Path, runs: &[PanelRun]) -> Result<(), Failure> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Failure::io(path, io::Error::other(e)))?;
    for run in runs {
        for r in &run.removals {
            w.serialize(RemovalRow {
                panel: &run.diagnostic.label,
                firm_id: &r.firm_id,
                year: r.year,
                reason: r.reason,
            })
            .map_err(|e| Failure::io(path, io::Error::other(e)))?;
        }
    }
    w.flush().map_err(|e| Failure::io(path, e))
}

fn run_diagnose(a: DiagnoseArgs) -> Result<i32, Failure> {
    let config = PrepConfig {
        scale_base: a.scale,
        trim_fraction: a.trim,
        identity_tolerance: a.panel.identity_tolerance,
    };
    config.validate()?;
    if a.jobs == 0 {
        return Err(Failure::usage("--jobs must be at least 1"));
    }
    let schema = a.panel.schema;
    let runs: Vec<Result<PanelRun, Failure>> = if a.jobs == 1 || a.input.len() == 1 {
        a.input.iter().map(|p| diagnose_file(p, schema, &config)).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(a.jobs)
            .build()
            .map_err(|e| Failure::usage(format!("cannot start {} workers: {e}", a.jobs)))?;
        pool.install(|| a.input.par_iter().map(|p| diagnose_file(p, schema, &config)).collect())
    };
    let runs = runs.into_iter().collect::<Result<Vec<_>, _>>()?;

    if let Some(path) = &a.removals {
        write_removals(path, &runs)?;
    }
    let degenerate = runs.iter().any(|r| r.diagnostic.degenerate);
    let report = Report::new(runs.into_iter().map(|r| r.diagnostic).collect());
    write_output(a.out.as_deref(), &report.to_json())?;
    Ok(if degenerate { EXIT_DEGENERATE } else { EXIT_OK })
}

fn simulation_config(a: &SimulateArgs) -> Result<SimulationConfig, Failure> {
    if let Some(path) = &a.config {
        let text = fs::read_to_string(path).map_err(|e| Failure::io(path, e))?;
        return Ok(SimulationConfig::from_json(&text)?);
    }
    let (Some(firms), Some(years), Some(mode), Some(seed)) = (a.firms, a.years, a.rest_mode, a.seed) else {
        return Err(Failure::usage("--firms, --years, --rest-mode and --seed are required without --config"));
    };
    let mut c = SimulationConfig::new(firms, years, mode, seed);
    c.rest_scale = a.rest_scale.unwrap_or(c.rest_scale);
    c.mix_fraction = a.mix_fraction.unwrap_or(c.mix_fraction);
    c.cf_location = a.cf_location.unwrap_or(c.cf_location);
    c.cf_spread = a.cf_spread.unwrap_or(c.cf_spread);
    c.base_assets_location = a.base_assets.unwrap_or(c.base_assets_location);
    c.start_year = a.start_year.unwrap_or(c.start_year);
    c.validate()?;
    Ok(c)
}

#[derive(Serialize)]
struct Sidecar<'a> {
    tool: &'static str,
    version: &'static str,
    generated_at_unix: u64,
    config: &'a SimulationConfig,
}

fn run_simulate(a: SimulateArgs) -> Result<i32, Failure> {
    let config = simulation_config(&a)?;
    let panel = synth::simulate_panel(&config)?;
    let mut buf = Vec::new();
    panel::write_csv(&panel, &mut buf).map_err(|e| Failure::io(Path::new("<buffer>"), io::Error::other(e)))?;
    write_output(a.out.as_deref(), std::str::from_utf8(&buf).expect("CSV output is UTF-8"))?;
    if let Some(out) = &a.out {
        let mut name = out.clone().into_os_string();
        name.push(".meta.json");
        let meta = Sidecar {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            generated_at_unix: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
            config: &config,
        };
        let text = serde_json::to_string_pretty(&meta).expect("sidecar serialises") + "\n";
        let path = PathBuf::from(name);
        fs::write(&path, text).map_err(|e| Failure::io(&path, e))?;
    }
    Ok(EXIT_OK)
}

fn run_table(a: TableArgs) -> Result<i32, Failure> {
    let mut diagnostics = Vec::new();
    for path in &a.inputs {
        let text = fs::read_to_string(path).map_err(|e| Failure::io(path, e))?;
        let report = report::parse_report(&text)
            .map_err(|e| Failure::data(Diagnostic::new(Code::DataError, format!("{}: {e}", path.display()))))?;
        diagnostics.extend(report.diagnostics);
    }
    write_output(a.out.as_deref(), &report::render_table(&diagnostics, a.format))?;
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct CheckSummary {
    records: usize,
    checked: usize,
    violations: usize,
}

/// Identity violations in a panel, without fitting anything.
pub fn identity_violations(panel: &Panel, tolerance: f64) -> Result<(usize, usize, Vec<Diagnostic>), PanelError> {
    let mut notes = Vec::new();
    let flows = match panel.schema_mode() {
        SchemaMode::Level => {
            let (p, d) = panel::difference_panel(panel)?;
            notes.extend(d);
            p
        }
        SchemaMode::Flow => panel.clone(),
    };
    let (flows, d) = panel::derive_delta_totals(&flows, tolerance)?;
    notes.extend(d);
    let mut violations: Vec<Diagnostic> = notes.into_iter().filter(|d| d.code == Code::IdentityViolation).collect();
    let mut checked = 0;
    for r in flows.records() {
        if r.components().is_some() {
            checked += 1;
        }
        if let Err(v) = prep::compute_rest(r, tolerance) {
            violations.push(Diagnostic::at_record(Code::IdentityViolation, &r.firm_id, Some(r.year), v.to_string()));
        }
    }
    Ok((flows.len(), checked, violations))
}

fn run_check(a: CheckArgs) -> Result<i32, Failure> {
    if !(a.panel.identity_tolerance > 0.0 && a.panel.identity_tolerance.is_finite()) {
        return Err(Failure::usage("--identity-tolerance must be positive"));
    }
    let panel = panel::ingest_csv(&a.input, a.panel.schema)?;
    let (records, checked, violations) = identity_violations(&panel, a.panel.identity_tolerance)?;
    emit(&violations);
    let summary = CheckSummary {
        records,
        checked,
        violations: violations.len(),
    };
    write_output(None, &(serde_json::to_string(&summary).expect("summary serialises") + "\n"))?;
    Ok(if violations.is_empty() { EXIT_OK } else { EXIT_DATA })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_flag_is_usage() {
        assert_eq!(cli_main(["asiaudit", "diagnose", "--bogus"]), EXIT_USAGE);
        assert_eq!(cli_main(["asiaudit"]), EXIT_USAGE);
    }

    #[test]
    fn help_is_success() {
        assert_eq!(cli_main(["asiaudit", "--help"]), EXIT_OK);
    }

    #[test]
    fn bad_trim_is_usage() {
        assert_eq!(cli_main(["asiaudit", "diagnose", "--input", "x.csv", "--trim", "0.5"]), EXIT_USAGE);
    }

    #[test]
    fn missing_file_is_data_error() {
        assert_eq!(cli_main(["asiaudit", "diagnose", "--input", "/nonexistent/p.csv"]), EXIT_DATA);
    }

    #[test]
    fn simulate_needs_flags_or_config() {
        assert_eq!(cli_main(["asiaudit", "simulate", "--firms", "10"]), EXIT_USAGE);
        assert_eq!(
            cli_main(["asiaudit", "simulate", "--config", "c.json", "--seed", "1"]),
            EXIT_USAGE
        );
    }

    #[test]
    fn violations_counted() {
        let text = "firm_id,year,total_assets,investment,cash_flow,d_ltd,d_capital_stock,depreciation,dividends,d_working_capital,d_ofa\n\
                    F1,2001,100,9,7,3,1,1,0.5,0.5,0\n\
                    F1,2002,110,9,7,5,1,1,0.5,0.5,0\n";
        let p = panel::read_csv_str(text, SchemaMode::Flow).unwrap();
        let (records, checked, v) = identity_violations(&p, 1e-6).unwrap();
        assert_eq!((records, checked, v.len()), (2, 2, 1));
        assert_eq!(v[0].year, Some(2002));
    }
}
