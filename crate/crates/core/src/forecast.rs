//! The five predictors behind one record type, and the benchmark that runs
//! them over a test year.
//!
//! All methods forecast the stepped target series at `issue + horizon` from
//! information available at the issue time:
//!
//! * `P` repeats the last stepped value.
//! * `SP` rescales it by the clear-sky ratio between the target and issue
//!   instants (falling back to plain persistence, flagged, where the
//!   clear-sky denominator sits below the floor).
//! * `WM` extrapolates a windowed local trend of the minute-resolution
//!   signal: `trend(10 min) + trend_derivative(75 min) * horizon`.
//! * `MLP` runs a trained network on trailing stepped values.
//! * `CSI-MLP` runs it on clear-sky-index lags and multiplies the predicted
//!   index by the clear-sky value at the target instant.
//!
//! Per the experiment layout, `P`/`SP`/`MLP`/`CSI-MLP` read the stepped
//! series while `WM` always reads minute records (for irradiation targets it
//! reads the minute-resolution running mean of the same window).

use crate::clearsky::{clear_sky_companion, clear_sky_index_against, ClearSkyError, ClearSkyIndexSeries, SolisParams};
use crate::mlp::{best_of_runs, MlpError, MlpModel, TrainSpec};
use crate::series::{MinuteSeries, SeriesError, SeriesKind, SteppedSeries, TimeSampled};
use crate::solar::{daylight_mask, SiteConfig};
use crate::trend::{trend, trend_derivative, DEFAULT_DERIVATIVE_WINDOW_S, DEFAULT_TREND_WINDOW_S};
use chrono::{Datelike, TimeZone, Utc};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ForecastError {
    #[error("invalid benchmark configuration:\n{}", issues.join("\n"))]
    Config { issues: Vec<String> },
    #[error("test year {0} has no valid daylight slots in the data")]
    EmptyTestYear(i32),
    #[error("no training pairs for {tag} (train years {years:?})")]
    NoTrainingData { tag: MethodTag, years: Vec<i32> },
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error(transparent)]
    ClearSky(#[from] ClearSkyError),
    #[error(transparent)]
    Mlp(#[from] MlpError),
}

/// Why a forecast slot is unavailable for a method.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlotIssue {
    /// The source series is invalid (or absent) at a required instant.
    InvalidSource,
    /// The lag window contains an invalid or out-of-range slot.
    MissingLags,
    /// The trend window is not sufficiently covered by valid minutes.
    InsufficientWindow,
    /// The clear-sky floor is violated where a division is required.
    FloorViolated,
}

/// The five forecasting methods, in report order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Method {
    P,
    Sp,
    Wm,
    Mlp,
    CsiMlp,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::P, Method::Sp, Method::Wm, Method::Mlp, Method::CsiMlp];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::P => "P",
            Method::Sp => "SP",
            Method::Wm => "WM",
            Method::Mlp => "MLP",
            Method::CsiMlp => "CSI_MLP",
        }
    }

    /// Whether the method needs a trained network.
    pub fn is_learned(&self) -> bool {
        matches!(self, Method::Mlp | Method::CsiMlp)
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Method {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "P" => Ok(Method::P),
            "SP" => Ok(Method::Sp),
            "WM" => Ok(Method::Wm),
            "MLP" => Ok(Method::Mlp),
            "CSI_MLP" | "CSI-MLP" | "CSIMLP" => Ok(Method::CsiMlp),
            other => Err(format!("unknown method `{other}`")),
        }
    }
}

/// A method plus, for the learned ones, how many training years fed it.
/// Printed as `P`, `SP`, `WM`, `MLP:2y`, `CSI_MLP:3y`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MethodTag {
    pub method: Method,
    pub learn_years: Option<u8>,
}

impl MethodTag {
    pub fn base(method: Method) -> Self {
        Self {
            method,
            learn_years: None,
        }
    }

    pub fn learned(method: Method, years: u8) -> Self {
        Self {
            method,
            learn_years: Some(years),
        }
    }
}

impl std::fmt::Display for MethodTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.learn_years {
            Some(k) => write!(f, "{}:{k}y", self.method),
            None => write!(f, "{}", self.method),
        }
    }
}

impl serde::Serialize for MethodTag {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

/// One (issue time, method, prediction, observation) evaluation unit.
#[derive(Debug, Clone, PartialEq)]
pub struct ForecastRecord {
    pub issue_epoch: i64,
    pub horizon_s: i64,
    pub tag: MethodTag,
    /// NaN when the record is invalid.
    pub predicted: f64,
    pub observed: f64,
    pub valid: bool,
    /// True for scaled-persistence slots that fell back to plain persistence
    /// because of the clear-sky floor.
    pub fallback: bool,
}

impl ForecastRecord {
    pub fn target_epoch(&self) -> i64 {
        self.issue_epoch + self.horizon_s
    }
}

/// Persistence: the stepped value at the issue instant.
pub fn persistence(series: &SteppedSeries, issue_epoch: i64) -> Result<f64, SlotIssue> {
    series
        .value_at_epoch(issue_epoch)
        .ok_or(SlotIssue::InvalidSource)
}

/// Core scaled-persistence arithmetic: rescale the last measurement by the
/// clear-sky ratio between target and issue instants.
pub fn scaled_persistence_value(last: f64, cs_issue: f64, cs_target: f64) -> f64 {
    last * cs_target / cs_issue
}

/// Scaled persistence over series; returns `(value, fell_back)`.
pub fn scaled_persistence(
    series: &SteppedSeries,
    clear_sky: &SteppedSeries,
    issue_epoch: i64,
    horizon_s: i64,
    floor_wm2: f64,
) -> Result<(f64, bool), SlotIssue> {
    let last = persistence(series, issue_epoch)?;
    let cs_issue = clear_sky.value_at_epoch(issue_epoch);
    let cs_target = clear_sky.value_at_epoch(issue_epoch + horizon_s);
    match (cs_issue, cs_target) {
        (Some(ci), Some(ct)) if ci >= floor_wm2 && ct >= floor_wm2 => {
            Ok((scaled_persistence_value(last, ci, ct), false))
        }
        // Ill-conditioned ratio: keep the slot comparable by falling back to
        // plain persistence, flagged so evaluation can exclude it.
        _ => Ok((last, true)),
    }
}

/// Trend extrapolation from minute records: level over a 10-minute window
/// plus slope over a 75-minute window times the horizon, floored at zero.
pub fn wm_forecast(
    minute_series: &MinuteSeries,
    issue_epoch: i64,
    horizon_s: i64,
) -> Result<f64, SlotIssue> {
    let level = trend(minute_series, issue_epoch, DEFAULT_TREND_WINDOW_S)
        .map_err(|_| SlotIssue::InsufficientWindow)?;
    let slope = trend_derivative(minute_series, issue_epoch, DEFAULT_DERIVATIVE_WINDOW_S)
        .map_err(|_| SlotIssue::InsufficientWindow)?;
    Ok((level + slope * horizon_s as f64).max(0.0))
}

/// Network forecast on raw stepped lags `x(t), x(t-step), ...`.
pub fn mlp_forecast(
    model: &MlpModel,
    series: &SteppedSeries,
    issue_epoch: i64,
) -> Result<f64, SlotIssue> {
    let lags = stepped_lags(series, issue_epoch, model.n_inputs())?;
    let y = model.forward(&lags).map_err(|_| SlotIssue::MissingLags)?;
    Ok(y.max(0.0))
}

/// Network forecast on clear-sky-index lags, rescaled by the clear-sky value
/// at the target instant.
pub fn csi_mlp_forecast(
    model: &MlpModel,
    kt: &ClearSkyIndexSeries,
    clear_sky: &SteppedSeries,
    issue_epoch: i64,
    horizon_s: i64,
    floor_wm2: f64,
) -> Result<f64, SlotIssue> {
    let cs_target = clear_sky
        .value_at_epoch(issue_epoch + horizon_s)
        .ok_or(SlotIssue::InvalidSource)?;
    if cs_target < floor_wm2 {
        return Err(SlotIssue::FloorViolated);
    }
    let lags = index_lags(kt, issue_epoch, model.n_inputs())?;
    let kt_hat = model.forward(&lags).map_err(|_| SlotIssue::MissingLags)?;
    Ok((kt_hat * cs_target).max(0.0))
}

fn stepped_lags(
    series: &SteppedSeries,
    issue_epoch: i64,
    n_lags: usize,
) -> Result<Vec<f64>, SlotIssue> {
    let mut lags = Vec::with_capacity(n_lags);
    for k in 0..n_lags {
        let epoch = issue_epoch - k as i64 * series.step_s();
        lags.push(series.value_at_epoch(epoch).ok_or(SlotIssue::MissingLags)?);
    }
    Ok(lags)
}

fn index_lags(
    kt: &ClearSkyIndexSeries,
    issue_epoch: i64,
    n_lags: usize,
) -> Result<Vec<f64>, SlotIssue> {
    let mut lags = Vec::with_capacity(n_lags);
    for k in 0..n_lags {
        let epoch = issue_epoch - k as i64 * kt.step_s();
        let idx = kt.index_of(epoch).ok_or(SlotIssue::MissingLags)?;
        if !kt.is_valid(idx) {
            return Err(SlotIssue::MissingLags);
        }
        lags.push(kt.value(idx));
    }
    Ok(lags)
}

/// Everything a benchmark run needs. `train_years` may be empty when no
/// learned method is requested.
#[derive(Debug, Clone)]
pub struct BenchmarkConfig {
    pub horizon_minutes: u32,
    pub step_minutes: u32,
    pub target_kind: SeriesKind,
    pub train_years: Vec<i32>,
    pub test_year: i32,
    pub site: SiteConfig,
    pub solis: SolisParams,
    pub train_spec: TrainSpec,
    /// Seeded trainings per learned model; the best validation run wins.
    pub train_runs: usize,
    pub methods: Vec<Method>,
    pub daylight_min_elevation_deg: f64,
    pub clear_sky_floor_wm2: f64,
    /// Minimum valid fraction inside trailing-mean windows.
    pub min_valid_fraction: f64,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        Self {
            horizon_minutes: 60,
            step_minutes: 60,
            target_kind: SeriesKind::Irradiation,
            train_years: vec![2012],
            test_year: 2013,
            site: SiteConfig::default(),
            solis: SolisParams::default(),
            train_spec: TrainSpec::default(),
            train_runs: 7,
            methods: Method::ALL.to_vec(),
            daylight_min_elevation_deg: crate::solar::DEFAULT_MIN_ELEVATION_DEG,
            clear_sky_floor_wm2: crate::clearsky::DEFAULT_CLEAR_SKY_FLOOR_WM2,
            min_valid_fraction: crate::series::DEFAULT_MIN_VALID_FRACTION,
        }
    }
}

impl BenchmarkConfig {
    /// Collects every configuration problem instead of stopping at the first.
    pub fn validate(&self) -> Result<(), ForecastError> {
        let mut issues = Vec::new();
        if self.horizon_minutes == 0 {
            issues.push("horizon must be positive".to_string());
        }
        if self.step_minutes == 0 {
            issues.push("step must be positive".to_string());
        } else if !self.horizon_minutes.is_multiple_of(self.step_minutes) {
            issues.push(format!(
                "horizon ({} min) must be a multiple of the step ({} min)",
                self.horizon_minutes, self.step_minutes
            ));
        }
        if self.train_years.contains(&self.test_year) {
            issues.push(format!(
                "test year {} overlaps the training years {:?}",
                self.test_year, self.train_years
            ));
        }
        if self.methods.is_empty() {
            issues.push("no methods requested".to_string());
        }
        if self.methods.iter().any(Method::is_learned) && self.train_years.is_empty() {
            issues.push("learned methods requested but no training years given".to_string());
        }
        if !(-5.0..=20.0).contains(&self.daylight_min_elevation_deg) {
            issues.push(format!(
                "daylight threshold {} outside [-5, 20] degrees",
                self.daylight_min_elevation_deg
            ));
        }
        if !(self.clear_sky_floor_wm2 > 0.0) {
            issues.push("clear-sky floor must be positive".to_string());
        }
        if !(0.0..=1.0).contains(&self.min_valid_fraction) {
            issues.push("valid fraction must lie in [0, 1]".to_string());
        }
        if self.train_runs == 0 {
            issues.push("need at least one training run".to_string());
        }
        if issues.is_empty() {
            Ok(())
        } else {
            Err(ForecastError::Config { issues })
        }
    }

    /// Method tags in report order, learned methods expanded per size.
    fn expanded_tags(&self) -> Vec<MethodTag> {
        let mut methods = self.methods.clone();
        methods.sort_unstable();
        methods.dedup();
        let n_sizes = self.train_years.len().min(u8::MAX as usize) as u8;
        let mut tags = Vec::new();
        for m in methods {
            if m.is_learned() {
                for k in 1..=n_sizes {
                    tags.push(MethodTag::learned(m, k));
                }
            } else {
                tags.push(MethodTag::base(m));
            }
        }
        tags
    }
}

fn year_of(epoch: i64) -> i32 {
    Utc.timestamp_opt(epoch, 0)
        .single()
        .expect("epoch in range")
        .year()
}

/// Runs every configured method over the valid daylight slots of the test
/// year and returns one record per method per slot, ordered by
/// (method, issue time). Learned methods are trained once per learning size
/// on the trailing subsets of the training years.
pub fn run_benchmark(
    cfg: &BenchmarkConfig,
    data: &MinuteSeries,
) -> Result<Vec<ForecastRecord>, ForecastError> {
    cfg.validate()?;
    let horizon_s = cfg.horizon_minutes as i64 * 60;

    let target = match cfg.target_kind {
        SeriesKind::Irradiation => data.trailing_mean(cfg.step_minutes, cfg.min_valid_fraction)?,
        SeriesKind::Irradiance => data.instantaneous(cfg.step_minutes)?,
    };
    let companion = clear_sky_companion(&target, &cfg.site, &cfg.solis);
    let mask = daylight_mask(&cfg.site, &target, cfg.daylight_min_elevation_deg);

    // WM reads minute records; for irradiation targets this is the
    // minute-resolution running mean of the same averaging window.
    let wm_running_mean;
    let wm_series: &MinuteSeries = match cfg.target_kind {
        SeriesKind::Irradiance => data,
        SeriesKind::Irradiation => {
            wm_running_mean = data.minute_trailing_mean(cfg.step_minutes, cfg.min_valid_fraction)?;
            &wm_running_mean
        }
    };

    let needs_csi = cfg.methods.contains(&Method::CsiMlp);
    let kt_series = if needs_csi {
        Some(clear_sky_index_against(&target, &companion, cfg.clear_sky_floor_wm2)?)
    } else {
        None
    };

    // Test slots: valid daylight marks of the test year.
    let test_slots: Vec<usize> = (0..target.len())
        .filter(|&s| mask[s] && year_of(target.epoch_at(s)) == cfg.test_year)
        .collect();
    if test_slots.is_empty() {
        return Err(ForecastError::EmptyTestYear(cfg.test_year));
    }

    let mut sorted_years = cfg.train_years.clone();
    sorted_years.sort_unstable();
    sorted_years.dedup();

    let tags = cfg.expanded_tags();
    let models = train_models(cfg, &tags, &target, &companion, kt_series.as_ref(), &mask, &sorted_years)?;

    let mut records = Vec::with_capacity(tags.len() * test_slots.len());
    for tag in &tags {
        for &s in &test_slots {
            let target_epoch = target.epoch_at(s);
            let issue = target_epoch - horizon_s;
            let observed = target.value(s);
            let outcome: Result<(f64, bool), SlotIssue> = match tag.method {
                Method::P => persistence(&target, issue).map(|v| (v, false)),
                Method::Sp => scaled_persistence(
                    &target,
                    &companion,
                    issue,
                    horizon_s,
                    cfg.clear_sky_floor_wm2,
                ),
                Method::Wm => wm_forecast(wm_series, issue, horizon_s).map(|v| (v, false)),
                Method::Mlp => {
                    let model = &models[tag];
                    mlp_forecast(model, &target, issue).map(|v| (v, false))
                }
                Method::CsiMlp => {
                    let model = &models[tag];
                    csi_mlp_forecast(
                        model,
                        kt_series.as_ref().expect("kt series built"),
                        &companion,
                        issue,
                        horizon_s,
                        cfg.clear_sky_floor_wm2,
                    )
                    .map(|v| (v, false))
                }
            };
            let record = match outcome {
                Ok((predicted, fallback)) => ForecastRecord {
                    issue_epoch: issue,
                    horizon_s,
                    tag: *tag,
                    predicted,
                    observed,
                    valid: true,
                    fallback,
                },
                Err(_) => ForecastRecord {
                    issue_epoch: issue,
                    horizon_s,
                    tag: *tag,
                    predicted: f64::NAN,
                    observed,
                    valid: false,
                    fallback: false,
                },
            };
            records.push(record);
        }
    }
    Ok(records)
}

type ModelMap = std::collections::BTreeMap<MethodTag, MlpModel>;

/// Trains one model per learned tag. Raw-value networks scale inputs and
/// outputs by the training-years clear-sky maximum (no test-year leakage);
/// index networks run in natural units.
#[allow(clippy::too_many_arguments)]
fn train_models(
    cfg: &BenchmarkConfig,
    tags: &[MethodTag],
    target: &SteppedSeries,
    companion: &SteppedSeries,
    kt_series: Option<&ClearSkyIndexSeries>,
    mask: &[bool],
    sorted_years: &[i32],
) -> Result<ModelMap, ForecastError> {
    let mut models = ModelMap::new();
    let learned: Vec<MethodTag> = tags.iter().filter(|t| t.method.is_learned()).copied().collect();
    if learned.is_empty() {
        return Ok(models);
    }

    let horizon_s = cfg.horizon_minutes as i64 * 60;
    let n_lags = cfg.train_spec.n_lags;

    // Clear-sky maximum over training-year daylight slots, used as the
    // raw-value scale.
    let mut cs_max: f64 = 1.0;
    for s in 0..target.len() {
        if mask[s] && sorted_years.contains(&year_of(target.epoch_at(s))) {
            cs_max = cs_max.max(companion.value(s));
        }
    }

    for tag in learned {
        let k = tag.learn_years.unwrap() as usize;
        let years = &sorted_years[sorted_years.len() - k..];
        let mut pairs: Vec<(Vec<f64>, f64)> = Vec::new();
        for s in 0..target.len() {
            if !mask[s] || !years.contains(&year_of(target.epoch_at(s))) {
                continue;
            }
            let target_epoch = target.epoch_at(s);
            let issue = target_epoch - horizon_s;
            match tag.method {
                Method::Mlp => {
                    if let Ok(lags) = stepped_lags(target, issue, n_lags) {
                        pairs.push((lags, target.value(s)));
                    }
                }
                Method::CsiMlp => {
                    let kt = kt_series.expect("kt series built");
                    let target_idx = kt.index_of(target_epoch);
                    let Some(ti) = target_idx else { continue };
                    if !kt.is_valid(ti) {
                        continue;
                    }
                    if let Ok(lags) = index_lags(kt, issue, n_lags) {
                        pairs.push((lags, kt.value(ti)));
                    }
                }
                _ => unreachable!(),
            }
        }
        if pairs.is_empty() {
            return Err(ForecastError::NoTrainingData {
                tag,
                years: years.to_vec(),
            });
        }
        let (in_scale, out_scale) = match tag.method {
            Method::Mlp => (cs_max, cs_max),
            _ => (1.0, 1.0),
        };
        let outcome = best_of_runs(&pairs, &cfg.train_spec, cfg.train_runs, in_scale, out_scale)?;
        models.insert(tag, outcome.model);
    }
    Ok(models)
}

/// Records as CSV: `issue_iso8601,horizon_s,method,predicted,observed,valid,fallback_flag`.
/// Invalid records leave the prediction field empty.
pub fn records_to_csv(records: &[ForecastRecord]) -> String {
    let mut out = String::with_capacity(records.len() * 64 + 64);
    out.push_str("issue_iso8601,horizon_s,method,predicted,observed,valid,fallback_flag\n");
    for r in records {
        let ts = Utc
            .timestamp_opt(r.issue_epoch, 0)
            .single()
            .expect("epoch in range")
            .to_rfc3339_opts(chrono::SecondsFormat::Secs, true);
        let predicted = if r.valid {
            format!("{}", r.predicted)
        } else {
            String::new()
        };
        out.push_str(&format!(
            "{ts},{},{},{predicted},{},{},{}\n",
            r.horizon_s, r.tag, r.observed, r.valid, r.fallback
        ));
    }
    out
}

/// Per-target-instant table for redrawing forecasts as line charts:
/// `epoch,observed,P,SP,WM,MLP,CSI_MLP`. For learned methods the largest
/// learning size fills the column; invalid slots stay empty.
pub fn plot_csv(records: &[ForecastRecord]) -> String {
    use std::collections::BTreeMap;
    let best_size = |method: Method| -> Option<MethodTag> {
        records
            .iter()
            .filter(|r| r.tag.method == method)
            .map(|r| r.tag)
            .max()
    };
    let columns: Vec<Option<MethodTag>> = Method::ALL.iter().map(|&m| best_size(m)).collect();

    #[derive(Default, Clone)]
    struct Row {
        observed: f64,
        predicted: [Option<f64>; 5],
    }
    let mut rows: BTreeMap<i64, Row> = BTreeMap::new();
    for r in records {
        let Some(col) = Method::ALL.iter().position(|&m| Some(r.tag) == columns[m as usize]) else {
            continue;
        };
        let entry = rows.entry(r.target_epoch()).or_default();
        entry.observed = r.observed;
        if r.valid {
            entry.predicted[col] = Some(r.predicted);
        }
    }

    let mut out = String::from("epoch,observed,P,SP,WM,MLP,CSI_MLP\n");
    for (epoch, row) in rows {
        out.push_str(&format!("{epoch},{}", row.observed));
        for p in row.predicted {
            match p {
                Some(v) => out.push_str(&format!(",{v}")),
                None => out.push(','),
            }
        }
        out.push('\n');
    }
    out
}
