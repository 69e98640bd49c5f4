//! Short-horizon solar irradiance and irradiation forecasting.
//!
//! The crate ingests minute-resolution irradiance records (or generates
//! seeded synthetic ones), derives hourly irradiation / irradiance targets,
//! and benchmarks five predictors against them at fixed horizons:
//!
//! * `P` — persistence of the last measurement,
//! * `SP` — persistence of the clear-sky index (scaled persistence),
//! * `WM` — windowed local trend plus trend-derivative extrapolation,
//! * `MLP` — a small multilayer perceptron on lagged values,
//! * `CSI-MLP` — the same network on clear-sky-index lags.
//!
//! Scores are normalized L1/L2 error norms over valid daylight slots.

pub mod clearsky;
pub mod eval;
pub mod forecast;
pub mod mlp;
pub mod rng;
pub mod series;
pub mod solar;
pub mod synth;
pub mod trend;

pub use clearsky::{clear_sky_index, solis_irradiance, ClearSkyIndexSeries, SolisParams};
pub use series::{parse_csv, serialize, MinuteSeries, SeriesKind, SteppedSeries, TimeSampled};
pub use solar::{daylight_mask, sun_position, SiteConfig, SunPosition};
