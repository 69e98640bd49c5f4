//! Subcommand implementations, separated from argument parsing so they can
//! be exercised directly.

use crate::config::RunConfig;
use chrono::NaiveDate;
use std::path::{Path, PathBuf};
use suncast_core::clearsky::calibrate_solis;
use suncast_core::eval::{evaluate, EvalMeta};
use suncast_core::forecast::{plot_csv, records_to_csv, run_benchmark, ForecastError};
use suncast_core::series::{parse_csv, serialize, TimeSampled};
use suncast_core::synth::{gen_days, CloudModel, Regime};

/// Failures sorted by exit code: usage/configuration problems exit 2, data
/// problems exit 3.
#[derive(Debug)]
pub enum CmdError {
    Usage(String),
    Data(String),
}

impl CmdError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CmdError::Usage(_) => 2,
            CmdError::Data(_) => 3,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CmdError::Usage(m) | CmdError::Data(m) => m,
        }
    }
}

fn read_config(path: &Path) -> Result<RunConfig, CmdError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CmdError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    RunConfig::parse(&text).map_err(CmdError::Usage)
}

fn write_file(path: &Path, contents: &str) -> Result<(), CmdError> {
    std::fs::write(path, contents)
        .map_err(|e| CmdError::Data(format!("cannot write {}: {e}", path.display())))
}

/// Parse, validate and normalize a measurement CSV. Gap and flag counts go
/// to standard error; hard parse failures are usage errors (exit 2).
pub fn cmd_ingest(input: &Path, output: &Path) -> Result<(), CmdError> {
    let text = std::fs::read_to_string(input)
        .map_err(|e| CmdError::Usage(format!("cannot read {}: {e}", input.display())))?;
    let parsed = parse_csv(&text).map_err(|e| CmdError::Usage(e.to_string()))?;
    eprintln!(
        "ingest: {} samples, {} gaps, {} negative, {} above ceiling, {} unparseable",
        parsed.series.len(),
        parsed.gaps,
        parsed.negative,
        parsed.over_ceiling,
        parsed.unparseable
    );
    write_file(output, &serialize(&parsed.series))
}

/// Generate a seeded synthetic dataset in the ingest CSV format.
pub fn cmd_synth(
    config: &Path,
    days: u32,
    seed: u64,
    output: &Path,
    regime: Regime,
    start: NaiveDate,
) -> Result<(), CmdError> {
    if days == 0 {
        return Err(CmdError::Usage("need at least one day".to_string()));
    }
    let cfg = read_config(config)?;
    let cloud = CloudModel::regime(regime, seed);
    let series = gen_days(&cfg.site, &cfg.solis, &cloud, start, days)
        .map_err(|e| CmdError::Usage(e.to_string()))?;
    write_file(output, &serialize(&series))
}

/// Derive the plot path from the records path when none is given:
/// `records.csv` becomes `records.plot.csv`.
fn default_plot_path(records: &Path) -> PathBuf {
    records.with_extension("plot.csv")
}

/// Run the benchmark and write the record CSV, the evaluation report (format
/// chosen by extension: .json, .csv, otherwise aligned text) and a plot-data
/// CSV for redrawing the forecasts.
pub fn cmd_bench(
    config: &Path,
    data: &Path,
    out_records: &Path,
    out_report: &Path,
    out_plot: Option<&Path>,
) -> Result<(), CmdError> {
    let cfg = read_config(config)?;
    let bench = cfg.to_benchmark();
    bench
        .validate()
        .map_err(|e| CmdError::Usage(e.to_string()))?;

    let text = std::fs::read_to_string(data)
        .map_err(|e| CmdError::Data(format!("cannot read {}: {e}", data.display())))?;
    let parsed = parse_csv(&text).map_err(|e| CmdError::Data(e.to_string()))?;

    let records = run_benchmark(&bench, &parsed.series).map_err(|e| match e {
        ForecastError::Config { .. } => CmdError::Usage(e.to_string()),
        other => CmdError::Data(other.to_string()),
    })?;
    let report = evaluate(
        &records,
        cfg.eval_options(),
        EvalMeta {
            horizon_minutes: cfg.horizon_min,
            step_minutes: cfg.step_min,
            target_kind: cfg.target,
            test_year: cfg.test_year,
        },
    );

    write_file(out_records, &records_to_csv(&records))?;
    let rendered = match out_report.extension().and_then(|e| e.to_str()) {
        Some("json") => report.to_json(),
        Some("csv") => report.to_csv(),
        _ => report.render_table(),
    };
    write_file(out_report, &rendered)?;
    let plot_path = out_plot
        .map(Path::to_path_buf)
        .unwrap_or_else(|| default_plot_path(out_records));
    write_file(&plot_path, &plot_csv(&records))?;

    print!("{}", report.render_table());
    Ok(())
}

/// Fit clear-sky parameters to a (caller-asserted cloud-free) dataset and
/// print them as a config fragment.
pub fn cmd_calibrate(data: &Path, config: &Path) -> Result<(), CmdError> {
    let cfg = read_config(config)?;
    let text = std::fs::read_to_string(data)
        .map_err(|e| CmdError::Data(format!("cannot read {}: {e}", data.display())))?;
    let parsed = parse_csv(&text).map_err(|e| CmdError::Data(e.to_string()))?;
    let fitted = calibrate_solis(&parsed.series, &cfg.site)
        .map_err(|e| CmdError::Data(e.to_string()))?;
    println!("solis.tau = {:.6}", fitted.tau);
    println!("solis.g = {:.6}", fitted.g);
    println!("solis.i0_adj = {:.3}", fitted.i0_adj_wm2);
    Ok(())
}
