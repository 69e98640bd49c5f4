//! `suncast`: ingest or synthesize minute irradiance data, calibrate the
//! clear-sky curve, and benchmark short-horizon forecasters.
//!
//! Exit codes: 0 success, 2 usage or configuration error, 3 data error.

mod commands;
mod config;

use chrono::NaiveDate;
use clap::{Parser, Subcommand};
use std::path::PathBuf;
use suncast_core::synth::Regime;

#[derive(Parser)]
#[command(
    name = "suncast",
    about = "Short-horizon solar irradiance/irradiation forecasting toolkit",
    long_about = "Short-horizon solar irradiance/irradiation forecasting toolkit.\n\n\
        The run configuration is a flat `key = value` file; see `suncast bench --help`\n\
        for the key list. Exit codes: 0 success, 2 usage/config error, 3 data error.",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

const CONFIG_KEYS: &str = "Configuration keys and defaults:
  site.lat = 48.66            latitude, degrees
  site.lon = 6.16             longitude, degrees
  site.alt = 320              altitude, meters
  site.name = default-site    label
  solis.tau = 0.35            clear-sky optical depth
  solis.g = 0.55              clear-sky elevation exponent
  solis.i0_adj = 1450         enhanced top-of-atmosphere irradiance, W/m2
  bench.horizon_min = 60      forecast horizon, minutes
  bench.step_min = 60         target step, minutes
  bench.target = irradiation  irradiation (trailing means) or irradiance
  bench.train_years = 2012    comma-separated years feeding the networks
  bench.test_year = 2013      held-out evaluation year
  bench.methods = P,SP,WM,MLP,CSI_MLP
  mlp.lags = 8                input lags
  mlp.hidden = 10             hidden tanh units
  mlp.lr = 0.05               learning rate
  mlp.momentum = 0.9
  mlp.epochs = 600            maximum training epochs
  mlp.patience = 60           early-stopping patience, epochs
  mlp.seed = 1                base seed; run i uses seed + i
  mlp.runs = 7                seeded runs per model, best validation kept
  eval.exclude_fallback = false   drop SP fallback slots from the scores
  eval.daylight_min_elev = 1.0    daylight mask threshold, degrees";

#[derive(Subcommand)]
enum Command {
    /// Parse, validate and normalize a `timestamp,value` CSV.
    ///
    /// Gap and flagged-sample counts are reported on standard error.
    Ingest {
        /// Input CSV (ISO-8601 UTC timestamps, W/m2 values).
        #[arg(long = "in")]
        input: PathBuf,
        /// Normalized output CSV.
        #[arg(long = "out")]
        output: PathBuf,
    },
    /// Generate a seeded synthetic minute dataset.
    Synth {
        /// Run configuration file (site and clear-sky keys are used).
        #[arg(long)]
        config: PathBuf,
        /// Number of days to generate.
        #[arg(long)]
        days: u32,
        /// Generator seed; identical seeds give identical files.
        #[arg(long)]
        seed: u64,
        /// Output CSV.
        #[arg(long = "out")]
        output: PathBuf,
        /// Sky condition: clear, broken or overcast.
        #[arg(long, default_value = "broken")]
        regime: Regime,
        /// First day (UTC), YYYY-MM-DD.
        #[arg(long, default_value = "2013-01-01")]
        start: NaiveDate,
    },
    /// Benchmark the configured methods over the test year.
    #[command(after_help = CONFIG_KEYS)]
    Bench {
        /// Run configuration file.
        #[arg(long)]
        config: PathBuf,
        /// Minute-resolution data CSV spanning the configured years.
        #[arg(long)]
        data: PathBuf,
        /// Per-slot forecast records (CSV).
        #[arg(long)]
        out_records: PathBuf,
        /// Evaluation report; .json and .csv extensions switch the format,
        /// anything else gets an aligned text table.
        #[arg(long)]
        out_report: PathBuf,
        /// Plot-data CSV (`epoch,observed,P,SP,WM,MLP,CSI_MLP`); defaults to
        /// the records path with a `.plot.csv` extension.
        #[arg(long)]
        out_plot: Option<PathBuf>,
    },
    /// Fit clear-sky parameters to cloud-free data and print them as a
    /// config fragment.
    Calibrate {
        /// Minute-resolution data CSV containing at least one clear day.
        #[arg(long)]
        data: PathBuf,
        /// Run configuration file (site keys are used).
        #[arg(long)]
        config: PathBuf,
    },
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Ingest { input, output } => commands::cmd_ingest(&input, &output),
        Command::Synth {
            config,
            days,
            seed,
            output,
            regime,
            start,
        } => commands::cmd_synth(&config, days, seed, &output, regime, start),
        Command::Bench {
            config,
            data,
            out_records,
            out_report,
            out_plot,
        } => commands::cmd_bench(
            &config,
            &data,
            &out_records,
            &out_report,
            out_plot.as_deref(),
        ),
        Command::Calibrate { data, config } => commands::cmd_calibrate(&data, &config),
    };
    if let Err(err) = result {
        eprintln!("suncast: {}", err.message());
        std::process::exit(err.exit_code());
    }
}
