//! Command-line front end: run scenarios, validate configs, and rebuild
//! comparison reports from emitted traces.
//!
//! Exit codes: 0 success, 1 configuration or I/O error, 2 when any filter
//! flagged a safety violation (handy for CI gating).

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use graspguard::filters::FilterVariant;
use graspguard::report::{render, ReportFormat};
use graspguard::scenario::Scenario;
use graspguard::sim::{metrics, run_many, FilterMetrics};
use graspguard::trace::{read_csv_path, write_csv_path};

#[derive(Parser)]
#[command(name = "graspguard", version, about = "Safe grasping simulation studies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every (scenario, filter) pair, write traces and a report.
    Run(RunArgs),
    /// Parse a scenario and check every invariant without running.
    Validate(ValidateArgs),
    /// Rebuild the comparison report from trace CSVs in a directory.
    Report(ReportArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Scenario TOML file.
    #[arg(long)]
    scenario: PathBuf,
    /// Filters to run (comma separated); defaults to the scenario's list.
    #[arg(long, value_delimiter = ',')]
    filters: Vec<String>,
    /// Output directory for traces and the report.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Override the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Report format: markdown or csv.
    #[arg(long, default_value = "markdown")]
    format: String,
}

#[derive(Args)]
struct ValidateArgs {
    /// Scenario TOML file.
    #[arg(long)]
    scenario: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    /// Directory holding trace_<filter>.csv files.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Report format: markdown or csv.
    #[arg(long, default_value = "markdown")]
    format: String,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Run(args) => cmd_run(&args),
        Command::Validate(args) => cmd_validate(&args),
        Command::Report(args) => cmd_report(&args),
    };
    match code {
        Ok(code) => code,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(1)
        }
    }
}

/// Worker cap from GRASPGUARD_THREADS (defaults to the number of jobs).
fn thread_cap(jobs: usize) -> usize {
    std::env::var("GRASPGUARD_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|v| *v >= 1)
        .unwrap_or(jobs)
        .min(jobs.max(1))
}

fn load_scenario(path: &Path, seed: Option<u64>) -> Result<Scenario, String> {
    let mut scenario =
        Scenario::from_path(path).map_err(|e| format!("{}: {e}", path.display()))?;
    if let Some(seed) = seed {
        scenario.seed = seed;
    }
    Ok(scenario)
}

fn cmd_run(args: &RunArgs) -> Result<ExitCode, String> {
    let format = ReportFormat::parse(&args.format)
        .ok_or_else(|| format!("unknown report format '{}'", args.format))?;
    let scenario = load_scenario(&args.scenario, args.seed)?;

    let validation = scenario.validate();
    for warning in &validation.warnings {
        eprintln!("warning: {warning}");
    }
    if !validation.ok() {
        for error in &validation.errors {
            eprintln!("invalid: {error}");
        }
        return Ok(ExitCode::from(1));
    }

    let filters: Vec<FilterVariant> = if args.filters.is_empty() {
        scenario.filter_list().map_err(|e| e.to_string())?
    } else {
        args.filters
            .iter()
            .map(|s| FilterVariant::parse(s))
            .collect::<Result<_, _>>()
            .map_err(|e| e.to_string())?
    };
    if filters.is_empty() {
        return Err("no filters selected".into());
    }

    std::fs::create_dir_all(&args.out)
        .map_err(|e| format!("cannot create {}: {e}", args.out.display()))?;

    let results = run_many(&scenario, &filters, thread_cap(filters.len()));
    let mut rows: Vec<FilterMetrics> = Vec::new();
    for (variant, outcome) in results {
        let trace = outcome.map_err(|e| format!("{}: {e}", variant.name()))?;
        let path = args.out.join(format!("trace_{}.csv", variant.name()));
        write_csv_path(&trace, &path).map_err(|e| format!("{}: {e}", path.display()))?;
        let m = metrics(variant, &trace).map_err(|e| e.to_string())?;
        println!(
            "{:7} min h1 {:+.4} h2 {:+.4} h3 {:+.4} h_max {:+.4}  {}",
            variant.name(),
            m.min_h1,
            m.min_h2,
            m.min_h3,
            m.min_h_max,
            if m.violation { "VIOLATED" } else { "ok" }
        );
        rows.push(m);
    }

    let report = render(format, &scenario.name, scenario.seed, &rows);
    let report_path = args.out.join(format!("report.{}", format.extension()));
    std::fs::write(&report_path, &report)
        .map_err(|e| format!("{}: {e}", report_path.display()))?;
    println!("traces and report written to {}", args.out.display());

    if rows.iter().any(|m| m.violation) {
        Ok(ExitCode::from(2))
    } else {
        Ok(ExitCode::SUCCESS)
    }
}

fn cmd_validate(args: &ValidateArgs) -> Result<ExitCode, String> {
    let scenario = load_scenario(&args.scenario, None)?;
    let validation = scenario.validate();
    for warning in &validation.warnings {
        println!("warning: {warning}");
    }
    if validation.ok() {
        println!("ok");
        Ok(ExitCode::SUCCESS)
    } else {
        for error in &validation.errors {
            println!("invalid: {error}");
        }
        Ok(ExitCode::from(1))
    }
}

fn cmd_report(args: &ReportArgs) -> Result<ExitCode, String> {
    let format = ReportFormat::parse(&args.format)
        .ok_or_else(|| format!("unknown report format '{}'", args.format))?;
    let mut rows = Vec::new();
    for variant in FilterVariant::ALL {
        let path = args.out.join(format!("trace_{}.csv", variant.name()));
        if !path.exists() {
            continue;
        }
        let trace = read_csv_path(&path).map_err(|e| format!("{}: {e}", path.display()))?;
        rows.push(metrics(variant, &trace).map_err(|e| e.to_string())?);
    }
    if rows.is_empty() {
        return Err(format!("no trace_<filter>.csv files in {}", args.out.display()));
    }
    let report = render(format, "(from traces)", 0, &rows);
    let report_path = args.out.join(format!("report.{}", format.extension()));
    std::fs::write(&report_path, &report)
        .map_err(|e| format!("{}: {e}", report_path.display()))?;
    print!("{report}");
    Ok(ExitCode::SUCCESS)
}
