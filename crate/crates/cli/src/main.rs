use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qsl_cli::report::{self, Format, ReportRow};
use qsl_cli::runner::{self, OptimizationSummary, RunOptions, ToleranceProfile};
use qsl_cli::scenario::{ScenarioSpec, Steps};
use qsl_cli::{load_scenario, CliError};

#[derive(Parser)]
#[command(name = "qsl", version, about = "Exact quantum speed limits for finite-dimensional systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    global: Global,
}

#[derive(Args)]
struct Global {
    /// Output format (default: json for single runs, csv for sweep and report).
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Worker threads for sweeps.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    /// Override the scenario seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Number of time steps, or `auto`.
    #[arg(long, global = true, value_parser = parse_steps)]
    steps: Option<Steps>,
    #[arg(long, global = true, value_enum, default_value_t = ToleranceProfile::Default)]
    tolerance_profile: ToleranceProfile,
    /// Record wall-clock time per row (makes output non-reproducible).
    #[arg(long, global = true)]
    timing: bool,
    /// Write to a file instead of stdout.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Check the exact uncertainty relation along the trajectory.
    VerifyUr {
        #[arg(long)]
        scenario: String,
    },
    /// Compute the exact times and the bound chain.
    Bounds {
        #[arg(long)]
        scenario: String,
    },
    /// Run `bounds` over a range of one scenario parameter.
    Sweep {
        #[arg(long)]
        scenario: String,
        /// Dotted field path, e.g. `horizon_T`, `dimension` or `hamiltonian.n_z`.
        #[arg(long)]
        axis: String,
        /// Comma-separated parameter values.
        #[arg(long, value_delimiter = ',', required_unless_present = "range", conflicts_with = "range")]
        values: Vec<f64>,
        /// `start:stop:count`, endpoints included.
        #[arg(long, value_parser = parse_range)]
        range: Option<Grid>,
    },
    /// Search for the fastest Hamiltonian to the target under the variance cap.
    Optimize {
        #[arg(long)]
        scenario: String,
    },
    /// Merge report files (CSV or JSON) into one table.
    Report {
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
}

fn parse_steps(s: &str) -> Result<Steps, String> {
    if s == "auto" {
        return Ok(Steps::Auto);
    }
    s.parse::<usize>().map(Steps::Fixed).map_err(|_| format!("expected a step count or `auto`, got `{s}`"))
}

#[derive(Clone)]
struct Grid(Vec<f64>);

fn parse_range(s: &str) -> Result<Grid, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [a, b, n] = parts[..] else {
        return Err("expected start:stop:count".into());
    };
    let a: f64 = a.parse().map_err(|e| format!("start: {e}"))?;
    let b: f64 = b.parse().map_err(|e| format!("stop: {e}"))?;
    let n: usize = n.parse().map_err(|e| format!("count: {e}"))?;
    match n {
        0 => Err("count must be positive".into()),
        1 => Ok(Grid(vec![a])),
        _ => Ok(Grid((0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect())),
    }
}

#[derive(serde::Serialize)]
struct OptimizeOutput<'a> {
    row: &'a ReportRow,
    result: Option<&'a OptimizationSummary>,
}

fn render_rows(rows: &[ReportRow], format: Format) -> Result<String, CliError> {
    match format {
        Format::Csv => {
            let mut buf = Vec::new();
            report::write_csv(&mut buf, rows)?;
            Ok(String::from_utf8(buf).expect("csv output is UTF-8"))
        }
        Format::Json if rows.len() == 1 => report::to_json(&rows[0]),
        Format::Json => report::to_json(&rows),
    }
}

type RowRunner<'a> = &'a dyn Fn(&qsl_cli::Scenario) -> Result<(ReportRow, Option<String>), CliError>;

/// Output text plus an error to report after it has been written.
fn execute(cli: &Cli) -> Result<(String, Option<CliError>), CliError> {
    let g = &cli.global;
    let opts = RunOptions { profile: g.tolerance_profile, timing: g.timing, seed: g.seed, steps: g.steps };
    let single = |scenario: &str, f: RowRunner| {
        let (text, origin) = load_scenario(scenario)?;
        let spec = ScenarioSpec::parse(&text, &origin)?;
        let sc = runner::prepare(&spec, Some(&text), &origin, &opts)?;
        let (row, json) = f(&sc)?;
        let out = match (g.format.unwrap_or(Format::Json), json) {
            (Format::Json, Some(j)) => j,
            (format, _) => render_rows(std::slice::from_ref(&row), format)?,
        };
        let mismatches = runner::check_expectations(&sc, &row, opts.profile)?;
        let err = (!mismatches.is_empty()).then_some(CliError::FixtureMismatch(mismatches));
        Ok((out, err))
    };
    match &cli.command {
        Command::VerifyUr { scenario } => single(scenario, &|sc| Ok((runner::run_verify_ur(sc, &opts)?, None))),
        Command::Bounds { scenario } => single(scenario, &|sc| Ok((runner::run_bounds(sc, &opts)?, None))),
        Command::Optimize { scenario } => single(scenario, &|sc| {
            let (row, summary) = runner::run_optimize(sc, &opts)?;
            let json = report::to_json(&OptimizeOutput { row: &row, result: summary.as_ref() })?;
            Ok((row, Some(json)))
        }),
        Command::Sweep { scenario, axis, values, range } => {
            let (text, origin) = load_scenario(scenario)?;
            // Validate the base document first so errors carry positions.
            ScenarioSpec::parse(&text, &origin)?;
            let doc: serde_json::Value = serde_json::from_str(&text)?;
            let values = range.as_ref().map_or_else(|| values.clone(), |g| g.0.clone());
            let rows = runner::run_sweep(&doc, &origin, axis, &values, &opts, g.jobs)?;
            Ok((render_rows(&rows, g.format.unwrap_or(Format::Csv))?, None))
        }
        Command::Report { files } => {
            let mut rows = Vec::new();
            for f in files {
                let text = std::fs::read_to_string(f)?;
                let is_json = f.extension().is_some_and(|e| e == "json") || text.trim_start().starts_with(['{', '[']);
                rows.extend(if is_json { report::rows_from_json(&text)? } else { report::read_csv(&text)? });
            }
            Ok((render_rows(&rows, g.format.unwrap_or(Format::Csv))?, None))
        }
    }
}

fn emit(cli: &Cli, text: &str) -> Result<(), CliError> {
    match &cli.global.output {
        Some(path) => std::fs::write(path, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = execute(&cli).and_then(|(text, deferred)| {
        emit(&cli, &text)?;
        deferred.map_or(Ok(()), Err)
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
