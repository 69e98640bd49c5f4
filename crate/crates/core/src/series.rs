//! Time-series containers, CSV ingestion and resampling.
//!
//! The raw input of the pipeline is a [`MinuteSeries`]: irradiance samples in
//! W/m² on a uniform one-minute grid with per-slot validity flags. Two
//! resampling schemes derive coarser series from it:
//!
//! * trailing means over the output step ("irradiation", Wh/m² for an hourly
//!   step), and
//! * instantaneous picks at the output marks ("irradiance").
//!
//! All timestamps are UTC seconds since the Unix epoch. Output grids are
//! aligned to absolute multiples of the output step so that hourly values sit
//! on wall-clock hour marks.

use chrono::{DateTime, SecondsFormat, TimeZone, Utc};
use thiserror::Error;

/// Physical ceiling for ground-level global irradiance. Values above it are
/// flagged as sensor spikes rather than rejected wholesale.
pub const DEFAULT_CEILING_WM2: f64 = 1500.0;

/// A resampled slot is kept only if at least this fraction of its source
/// samples is valid (55 of 60 for an hourly mean).
pub const DEFAULT_MIN_VALID_FRACTION: f64 = 55.0 / 60.0;

#[derive(Debug, Error)]
pub enum SeriesError {
    #[error("empty input")]
    EmptyInput,
    #[error("line {line}: unparseable timestamp `{text}`")]
    BadTimestamp { line: usize, text: String },
    #[error("line {line}: timestamp has sub-second precision; the grid step must be a whole number of seconds")]
    SubSecondTimestamp { line: usize },
    #[error("line {line}: non-monotonic timestamp")]
    NonMonotonicTimestamp { line: usize },
    #[error("line {line}: duplicate timestamp")]
    DuplicateTimestamp { line: usize },
    #[error("line {line}: timestamp off the inferred {step_s} s grid")]
    OffGridTimestamp { line: usize, step_s: i64 },
    #[error("step must be positive, got {0}")]
    NonPositiveStep(i64),
    #[error("values and validity flags differ in length ({values} vs {valid})")]
    LengthMismatch { values: usize, valid: usize },
    #[error("sample {index} is {value} but valid samples must lie in [0, {ceiling}]")]
    OutOfRange { index: usize, value: f64, ceiling: f64 },
    #[error("series spans {got_s} s, shorter than one output step of {need_s} s")]
    TooShort { got_s: i64, need_s: i64 },
    #[error("source step is {got_s} s but this operation requires {need_s} s")]
    WrongSourceStep { got_s: i64, need_s: i64 },
}

/// Whether a resampled series holds interval energy (trailing means, Wh/m²
/// for an hourly step) or instantaneous power (W/m²).
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum SeriesKind {
    Irradiation,
    Irradiance,
}

impl std::fmt::Display for SeriesKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SeriesKind::Irradiation => write!(f, "irradiation"),
            SeriesKind::Irradiance => write!(f, "irradiance"),
        }
    }
}

/// Common view of a uniformly sampled, validity-flagged series.
pub trait TimeSampled {
    fn start_epoch(&self) -> i64;
    fn step_s(&self) -> i64;
    fn len(&self) -> usize;
    fn is_valid(&self, index: usize) -> bool;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn epoch_at(&self, index: usize) -> i64 {
        self.start_epoch() + index as i64 * self.step_s()
    }

    /// Grid index of `epoch`, if it lies exactly on the grid.
    fn index_of(&self, epoch: i64) -> Option<usize> {
        let off = epoch - self.start_epoch();
        if off < 0 || off % self.step_s() != 0 {
            return None;
        }
        let idx = (off / self.step_s()) as usize;
        (idx < self.len()).then_some(idx)
    }
}

/// Uniform-step minute samples of global irradiance with validity flags.
///
/// Invariants enforced at construction: positive step, equal-length value and
/// flag vectors, and every valid sample finite within `[0, ceiling]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MinuteSeries {
    start_epoch: i64,
    step_s: i64,
    values: Vec<f64>,
    valid: Vec<bool>,
}

impl MinuteSeries {
    pub fn new(
        start_epoch: i64,
        step_s: i64,
        values: Vec<f64>,
        valid: Vec<bool>,
    ) -> Result<Self, SeriesError> {
        Self::with_ceiling(start_epoch, step_s, values, valid, DEFAULT_CEILING_WM2)
    }

    pub fn with_ceiling(
        start_epoch: i64,
        step_s: i64,
        values: Vec<f64>,
        valid: Vec<bool>,
        ceiling: f64,
    ) -> Result<Self, SeriesError> {
        if step_s <= 0 {
            return Err(SeriesError::NonPositiveStep(step_s));
        }
        if values.len() != valid.len() {
            return Err(SeriesError::LengthMismatch {
                values: values.len(),
                valid: valid.len(),
            });
        }
        if values.is_empty() {
            return Err(SeriesError::EmptyInput);
        }
        // An infinite ceiling marks a derived series (trends, fluctuations)
        // where only finiteness applies; measurement series stay in range.
        for (i, (&v, &ok)) in values.iter().zip(&valid).enumerate() {
            let in_range = if ceiling.is_finite() {
                (0.0..=ceiling).contains(&v)
            } else {
                v.is_finite()
            };
            if ok && !(v.is_finite() && in_range) {
                return Err(SeriesError::OutOfRange {
                    index: i,
                    value: v,
                    ceiling,
                });
            }
        }
        Ok(Self {
            start_epoch,
            step_s,
            values,
            valid,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn valid(&self) -> &[bool] {
        &self.valid
    }

    pub fn value(&self, index: usize) -> f64 {
        self.values[index]
    }

    pub fn end_epoch(&self) -> i64 {
        self.start_epoch + (self.values.len() as i64 - 1) * self.step_s
    }

    /// Trailing mean over `step_minutes` of source, emitted on the absolute
    /// `step_minutes` grid (irradiation). A slot is valid only if its trailing
    /// window lies inside the series and at least `min_valid_fraction` of the
    /// window's samples are valid; the mean is taken over valid samples.
    pub fn trailing_mean(
        &self,
        step_minutes: u32,
        min_valid_fraction: f64,
    ) -> Result<SteppedSeries, SeriesError> {
        self.require_minute_step()?;
        let (marks, step_out) = self.output_marks(step_minutes)?;
        let window = step_minutes as usize;
        let mut values = Vec::with_capacity(marks.len());
        let mut valid = Vec::with_capacity(marks.len());
        let mut any_valid = false;
        for &mark in &marks {
            let window_start = mark - (window as i64 - 1) * self.step_s;
            match self.index_of(window_start) {
                Some(first) => {
                    let slice_v = &self.values[first..first + window];
                    let slice_ok = &self.valid[first..first + window];
                    let n_ok = slice_ok.iter().filter(|&&b| b).count();
                    if (n_ok as f64) < min_valid_fraction * window as f64 || n_ok == 0 {
                        values.push(0.0);
                        valid.push(false);
                    } else {
                        let sum: f64 = slice_v
                            .iter()
                            .zip(slice_ok)
                            .filter(|(_, &ok)| ok)
                            .map(|(&v, _)| v)
                            .sum();
                        values.push(sum / n_ok as f64);
                        valid.push(true);
                        any_valid = true;
                    }
                }
                None => {
                    values.push(0.0);
                    valid.push(false);
                }
            }
        }
        if !any_valid {
            return Err(SeriesError::TooShort {
                got_s: self.end_epoch() - self.start_epoch,
                need_s: step_out,
            });
        }
        SteppedSeries::from_parts(marks[0], step_out, values, valid, SeriesKind::Irradiation)
    }

    /// Instantaneous samples at the absolute `step_minutes` marks (irradiance).
    pub fn instantaneous(&self, step_minutes: u32) -> Result<SteppedSeries, SeriesError> {
        self.require_minute_step()?;
        let (marks, step_out) = self.output_marks(step_minutes)?;
        let mut values = Vec::with_capacity(marks.len());
        let mut valid = Vec::with_capacity(marks.len());
        for &mark in &marks {
            // Marks are on the source grid by construction.
            let idx = self.index_of(mark).expect("mark on source grid");
            values.push(if self.valid[idx] { self.values[idx] } else { 0.0 });
            valid.push(self.valid[idx]);
        }
        SteppedSeries::from_parts(marks[0], step_out, values, valid, SeriesKind::Irradiance)
    }

    /// Running trailing mean at minute resolution (same grid as `self`).
    ///
    /// Slot `t` holds the mean of the `window_minutes` samples ending at `t`,
    /// with the same validity rule as [`MinuteSeries::trailing_mean`]. This is
    /// the minute-resolution view of the irradiation process.
    pub fn minute_trailing_mean(
        &self,
        window_minutes: u32,
        min_valid_fraction: f64,
    ) -> Result<MinuteSeries, SeriesError> {
        self.require_minute_step()?;
        let window = window_minutes as usize;
        if window == 0 {
            return Err(SeriesError::NonPositiveStep(0));
        }
        if self.values.len() < window {
            return Err(SeriesError::TooShort {
                got_s: self.end_epoch() - self.start_epoch,
                need_s: window as i64 * self.step_s,
            });
        }
        let n = self.values.len();
        let mut values = vec![0.0; n];
        let mut valid = vec![false; n];
        for t in (window - 1)..n {
            let first = t + 1 - window;
            let slice_v = &self.values[first..=t];
            let slice_ok = &self.valid[first..=t];
            let n_ok = slice_ok.iter().filter(|&&b| b).count();
            if (n_ok as f64) >= min_valid_fraction * window as f64 && n_ok > 0 {
                let sum: f64 = slice_v
                    .iter()
                    .zip(slice_ok)
                    .filter(|(_, &ok)| ok)
                    .map(|(&v, _)| v)
                    .sum();
                values[t] = sum / n_ok as f64;
                valid[t] = true;
            }
        }
        MinuteSeries::new(self.start_epoch, self.step_s, values, valid)
    }

    fn require_minute_step(&self) -> Result<(), SeriesError> {
        if self.step_s != 60 {
            return Err(SeriesError::WrongSourceStep {
                got_s: self.step_s,
                need_s: 60,
            });
        }
        Ok(())
    }

    /// Absolute output marks (multiples of `step_minutes` minutes) inside the
    /// series span.
    fn output_marks(&self, step_minutes: u32) -> Result<(Vec<i64>, i64), SeriesError> {
        if step_minutes == 0 {
            return Err(SeriesError::NonPositiveStep(0));
        }
        let step_out = step_minutes as i64 * 60;
        let first = self.start_epoch.div_euclid(step_out) * step_out;
        let first = if first < self.start_epoch {
            first + step_out
        } else {
            first
        };
        let last = self.end_epoch();
        if first > last {
            return Err(SeriesError::TooShort {
                got_s: last - self.start_epoch,
                need_s: step_out,
            });
        }
        let marks: Vec<i64> = (0..)
            .map(|k| first + k * step_out)
            .take_while(|&m| m <= last)
            .collect();
        Ok((marks, step_out))
    }
}

impl TimeSampled for MinuteSeries {
    fn start_epoch(&self) -> i64 {
        self.start_epoch
    }
    fn step_s(&self) -> i64 {
        self.step_s
    }
    fn len(&self) -> usize {
        self.values.len()
    }
    fn is_valid(&self, index: usize) -> bool {
        self.valid[index]
    }
}

/// Resampled series on a coarser absolute grid: hourly (or e.g. 5-minute)
/// irradiation or irradiance values.
#[derive(Debug, Clone, PartialEq)]
pub struct SteppedSeries {
    start_epoch: i64,
    step_s: i64,
    values: Vec<f64>,
    valid: Vec<bool>,
    kind: SeriesKind,
}

impl SteppedSeries {
    pub fn from_parts(
        start_epoch: i64,
        step_s: i64,
        values: Vec<f64>,
        valid: Vec<bool>,
        kind: SeriesKind,
    ) -> Result<Self, SeriesError> {
        if step_s <= 0 {
            return Err(SeriesError::NonPositiveStep(step_s));
        }
        if values.len() != valid.len() {
            return Err(SeriesError::LengthMismatch {
                values: values.len(),
                valid: valid.len(),
            });
        }
        if values.is_empty() {
            return Err(SeriesError::EmptyInput);
        }
        for (i, (&v, &ok)) in values.iter().zip(&valid).enumerate() {
            if ok && !(v.is_finite() && (0.0..=DEFAULT_CEILING_WM2).contains(&v)) {
                return Err(SeriesError::OutOfRange {
                    index: i,
                    value: v,
                    ceiling: DEFAULT_CEILING_WM2,
                });
            }
        }
        Ok(Self {
            start_epoch,
            step_s,
            values,
            valid,
            kind,
        })
    }

    pub fn kind(&self) -> SeriesKind {
        self.kind
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn valid(&self) -> &[bool] {
        &self.valid
    }

    pub fn value(&self, index: usize) -> f64 {
        self.values[index]
    }

    pub fn end_epoch(&self) -> i64 {
        self.start_epoch + (self.values.len() as i64 - 1) * self.step_s
    }

    /// Valid value at an exact grid epoch, if any.
    pub fn value_at_epoch(&self, epoch: i64) -> Option<f64> {
        self.index_of(epoch)
            .filter(|&i| self.valid[i])
            .map(|i| self.values[i])
    }
}

impl TimeSampled for SteppedSeries {
    fn start_epoch(&self) -> i64 {
        self.start_epoch
    }
    fn step_s(&self) -> i64 {
        self.step_s
    }
    fn len(&self) -> usize {
        self.values.len()
    }
    fn is_valid(&self, index: usize) -> bool {
        self.valid[index]
    }
}

/// Outcome of a CSV ingest: the gridded series plus counts of what was
/// flagged along the way.
#[derive(Debug)]
pub struct ParsedCsv {
    pub series: MinuteSeries,
    /// Grid slots with no row in the file.
    pub gaps: usize,
    /// Rows whose value was negative.
    pub negative: usize,
    /// Rows whose value exceeded the physical ceiling.
    pub over_ceiling: usize,
    /// Rows whose value field did not parse as a finite number.
    pub unparseable: usize,
}

impl ParsedCsv {
    pub fn flagged(&self) -> usize {
        self.negative + self.over_ceiling + self.unparseable
    }
}

/// Parses `timestamp,value` CSV text into a [`MinuteSeries`].
///
/// Timestamps are ISO-8601 UTC on a uniform grid; gaps are allowed and become
/// invalid slots. The grid start and step are inferred from the first two
/// rows (a single-row file defaults to a 60 s step). An optional header
/// line starting with `timestamp` is skipped. Out-of-range or unparseable
/// values flag their slot invalid and are counted, not fatal.
pub fn parse_csv(text: &str) -> Result<ParsedCsv, SeriesError> {
    parse_csv_with_ceiling(text, DEFAULT_CEILING_WM2)
}

pub fn parse_csv_with_ceiling(text: &str, ceiling: f64) -> Result<ParsedCsv, SeriesError> {
    struct Row {
        line: usize,
        epoch: i64,
        value: Result<f64, ()>,
    }

    let mut rows: Vec<Row> = Vec::new();
    let mut prev_epoch: Option<i64> = None;
    for (line_idx, raw) in text.lines().enumerate() {
        let line_no = line_idx + 1;
        let line = raw.trim_end_matches('\r').trim();
        if line.is_empty() {
            continue;
        }
        if rows.is_empty() && line.to_ascii_lowercase().starts_with("timestamp") {
            continue; // header
        }
        let (ts_text, value_text) = match line.split_once(',') {
            Some(parts) => parts,
            None => (line, ""),
        };
        let ts = DateTime::parse_from_rfc3339(ts_text.trim()).map_err(|_| {
            SeriesError::BadTimestamp {
                line: line_no,
                text: ts_text.trim().to_string(),
            }
        })?;
        if ts.timestamp_subsec_nanos() != 0 {
            return Err(SeriesError::SubSecondTimestamp { line: line_no });
        }
        let epoch = ts.timestamp();
        if let Some(prev) = prev_epoch {
            if epoch == prev {
                return Err(SeriesError::DuplicateTimestamp { line: line_no });
            }
            if epoch < prev {
                return Err(SeriesError::NonMonotonicTimestamp { line: line_no });
            }
        }
        prev_epoch = Some(epoch);
        let value = value_text
            .trim()
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or(());
        rows.push(Row {
            line: line_no,
            epoch,
            value,
        });
    }

    if rows.is_empty() {
        return Err(SeriesError::EmptyInput);
    }

    let start = rows[0].epoch;
    let step = if rows.len() >= 2 {
        rows[1].epoch - rows[0].epoch
    } else {
        60
    };

    // Verify every row sits on the inferred grid before allocating it.
    for row in &rows {
        if (row.epoch - start) % step != 0 {
            return Err(SeriesError::OffGridTimestamp {
                line: row.line,
                step_s: step,
            });
        }
    }

    let n = ((rows.last().unwrap().epoch - start) / step + 1) as usize;
    let mut values = vec![0.0; n];
    let mut valid = vec![false; n];
    let (mut negative, mut over_ceiling, mut unparseable) = (0usize, 0usize, 0usize);
    for row in &rows {
        let idx = ((row.epoch - start) / step) as usize;
        match row.value {
            Ok(v) if v < 0.0 => negative += 1,
            Ok(v) if v > ceiling => over_ceiling += 1,
            Ok(v) => {
                values[idx] = v;
                valid[idx] = true;
            }
            Err(()) => unparseable += 1,
        }
    }
    let gaps = n - rows.len();
    let series = MinuteSeries::with_ceiling(start, step, values, valid, ceiling)?;
    Ok(ParsedCsv {
        series,
        gaps,
        negative,
        over_ceiling,
        unparseable,
    })
}

/// Writes the series in the ingest format: a header line, then one
/// `timestamp,value` row per valid slot. Fully valid series round-trip
/// bit-exactly through [`parse_csv`].
pub fn serialize(series: &MinuteSeries) -> String {
    let mut out = String::with_capacity(series.len() * 32);
    out.push_str("timestamp,irradiance_wm2\n");
    for i in 0..series.len() {
        if series.is_valid(i) {
            let ts = Utc
                .timestamp_opt(series.epoch_at(i), 0)
                .single()
                .expect("valid epoch");
            out.push_str(&ts.to_rfc3339_opts(SecondsFormat::Secs, true));
            out.push(',');
            out.push_str(&format!("{}", series.value(i)));
            out.push('\n');
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn epoch(s: &str) -> i64 {
        DateTime::parse_from_rfc3339(s).unwrap().timestamp()
    }

    #[test]
    fn parse_two_rows() {
        let text = "2013-02-13T08:00:00Z,100\n2013-02-13T08:01:00Z,110\n";
        let parsed = parse_csv(text).unwrap();
        assert_eq!(parsed.series.start_epoch(), epoch("2013-02-13T08:00:00Z"));
        assert_eq!(parsed.series.step_s(), 60);
        assert_eq!(parsed.series.values(), &[100.0, 110.0]);
        assert!(parsed.series.valid().iter().all(|&b| b));
        assert_eq!(parsed.gaps, 0);
    }

    #[test]
    fn parse_gap_becomes_invalid_slot() {
        let text = "2013-02-13T08:00:00Z,100\n2013-02-13T08:01:00Z,110\n2013-02-13T08:03:00Z,120\n";
        let parsed = parse_csv(text).unwrap();
        assert_eq!(parsed.series.len(), 4);
        assert_eq!(parsed.series.valid(), &[true, true, false, true]);
        assert_eq!(parsed.gaps, 1);
    }

    #[test]
    fn parse_gap_between_first_two_rows_defines_grid() {
        // Step inference uses the first two rows; a leading gap widens the grid.
        let text = "2013-02-13T08:00:00Z,100\n2013-02-13T08:02:00Z,120\n";
        let parsed = parse_csv(text).unwrap();
        assert_eq!(parsed.series.step_s(), 120);
    }

    #[test]
    fn parse_negative_value_flagged() {
        let text = "2013-02-13T08:00:00Z,100\n2013-02-13T08:01:00Z,-5\n";
        let parsed = parse_csv(text).unwrap();
        assert_eq!(parsed.series.valid(), &[true, false]);
        assert_eq!(parsed.negative, 1);
        assert_eq!(parsed.flagged(), 1);
    }

    #[test]
    fn parse_spike_and_garbage_flagged() {
        let text = "t\n2013-02-13T08:00:00Z,2000\n2013-02-13T08:01:00Z,abc\n2013-02-13T08:02:00Z,5\n";
        // First line is not a recognized header and not a timestamp.
        assert!(matches!(
            parse_csv(text),
            Err(SeriesError::BadTimestamp { line: 1, .. })
        ));
        let text = "timestamp,irradiance_wm2\n2013-02-13T08:00:00Z,2000\n2013-02-13T08:01:00Z,abc\n2013-02-13T08:02:00Z,5\n";
        let parsed = parse_csv(text).unwrap();
        assert_eq!(parsed.over_ceiling, 1);
        assert_eq!(parsed.unparseable, 1);
        assert_eq!(parsed.series.valid(), &[false, false, true]);
    }

    #[test]
    fn parse_errors_are_distinct() {
        assert!(matches!(parse_csv(""), Err(SeriesError::EmptyInput)));
        assert!(matches!(
            parse_csv("2013-02-13T08:01:00Z,1\n2013-02-13T08:00:00Z,2\n"),
            Err(SeriesError::NonMonotonicTimestamp { line: 2 })
        ));
        assert!(matches!(
            parse_csv("2013-02-13T08:00:00Z,1\n2013-02-13T08:00:00Z,2\n"),
            Err(SeriesError::DuplicateTimestamp { line: 2 })
        ));
        assert!(matches!(
            parse_csv("2013-02-13T08:00:00.500Z,1\n"),
            Err(SeriesError::SubSecondTimestamp { line: 1 })
        ));
        assert!(matches!(
            parse_csv("2013-02-13T08:00:00Z,1\n2013-02-13T08:01:00Z,2\n2013-02-13T08:01:30Z,3\n"),
            Err(SeriesError::OffGridTimestamp { line: 3, step_s: 60 })
        ));
    }

    #[test]
    fn crlf_and_header_accepted() {
        let text = "timestamp,irradiance_wm2\r\n2013-02-13T08:00:00Z,1.5\r\n2013-02-13T08:01:00Z,2.5\r\n";
        let parsed = parse_csv(text).unwrap();
        assert_eq!(parsed.series.values(), &[1.5, 2.5]);
    }

    fn minute_series(start: i64, values: Vec<f64>) -> MinuteSeries {
        let valid = vec![true; values.len()];
        MinuteSeries::new(start, 60, values, valid).unwrap()
    }

    #[test]
    fn trailing_mean_constant() {
        // Two hours of constant 100 W/m² starting on an hour mark.
        let start = epoch("2013-06-01T06:00:00Z");
        let ms = minute_series(start, vec![100.0; 121]);
        let hourly = ms.trailing_mean(60, DEFAULT_MIN_VALID_FRACTION).unwrap();
        assert_eq!(hourly.kind(), SeriesKind::Irradiation);
        // First mark (06:00) lacks a trailing hour; 07:00 and 08:00 are valid.
        let valid_values: Vec<f64> = (0..hourly.len())
            .filter(|&i| hourly.is_valid(i))
            .map(|i| hourly.value(i))
            .collect();
        assert_eq!(valid_values, vec![100.0, 100.0]);
    }

    #[test]
    fn trailing_mean_ramp_is_average() {
        // Ramp 0..=59 whose window ends exactly on the hour mark.
        let mark = epoch("2013-06-01T07:00:00Z");
        let start = mark - 59 * 60;
        let ms = minute_series(start, (0..60).map(f64::from).collect());
        let hourly = ms.trailing_mean(60, DEFAULT_MIN_VALID_FRACTION).unwrap();
        let idx = hourly.index_of(mark).unwrap();
        assert!(hourly.is_valid(idx));
        assert_eq!(hourly.value(idx), 29.5);
    }

    #[test]
    fn trailing_mean_rejects_sparse_hour() {
        let mark = epoch("2013-06-01T07:00:00Z");
        let start = mark - 59 * 60;
        let mut valid = vec![true; 60];
        for flag in valid.iter_mut().take(30) {
            *flag = false;
        }
        let ms = MinuteSeries::new(start, 60, vec![100.0; 60], valid).unwrap();
        let hourly = ms.trailing_mean(60, DEFAULT_MIN_VALID_FRACTION);
        // The single candidate hour is invalid, so there is nothing to emit.
        assert!(matches!(hourly, Err(SeriesError::TooShort { .. })));
    }

    #[test]
    fn trailing_mean_too_short() {
        let ms = minute_series(epoch("2013-06-01T06:00:00Z"), vec![1.0; 30]);
        assert!(matches!(
            ms.trailing_mean(60, DEFAULT_MIN_VALID_FRACTION),
            Err(SeriesError::TooShort { .. })
        ));
    }

    #[test]
    fn instantaneous_picks_grid_samples() {
        let start = epoch("2013-06-01T06:00:00Z");
        let ms = minute_series(start, (0..=180).map(f64::from).collect());
        let hourly = ms.instantaneous(60).unwrap();
        assert_eq!(hourly.kind(), SeriesKind::Irradiance);
        assert_eq!(hourly.values(), &[0.0, 60.0, 120.0, 180.0]);

        let five = ms.instantaneous(5).unwrap();
        assert_eq!(five.step_s(), 300);
        assert_eq!(five.value(1), 5.0);
    }

    #[test]
    fn instantaneous_propagates_validity() {
        let start = epoch("2013-06-01T06:00:00Z");
        let mut valid = vec![true; 121];
        valid[60] = false;
        let ms = MinuteSeries::new(start, 60, vec![10.0; 121], valid).unwrap();
        let hourly = ms.instantaneous(60).unwrap();
        assert_eq!(hourly.valid(), &[true, false, true]);
    }

    #[test]
    fn instantaneous_zero_step_rejected() {
        let ms = minute_series(epoch("2013-06-01T06:00:00Z"), vec![1.0; 10]);
        assert!(matches!(
            ms.instantaneous(0),
            Err(SeriesError::NonPositiveStep(0))
        ));
    }

    #[test]
    fn minute_trailing_mean_matches_stepped_at_marks() {
        let start = epoch("2013-06-01T06:00:00Z");
        let values: Vec<f64> = (0..240).map(|i| (i % 97) as f64 * 3.5).collect();
        let ms = minute_series(start, values);
        let running = ms.minute_trailing_mean(60, DEFAULT_MIN_VALID_FRACTION).unwrap();
        let hourly = ms.trailing_mean(60, DEFAULT_MIN_VALID_FRACTION).unwrap();
        for i in 0..hourly.len() {
            if hourly.is_valid(i) {
                let j = running.index_of(hourly.epoch_at(i)).unwrap();
                assert!(running.is_valid(j));
                assert_eq!(running.value(j), hourly.value(i));
            }
        }
    }

    #[test]
    fn trailing_mean_is_linear() {
        let start = epoch("2013-06-01T06:00:00Z");
        let xs: Vec<f64> = (0..180).map(|i| (i as f64 * 1.7) % 90.0).collect();
        let ys: Vec<f64> = (0..180).map(|i| ((i * i) % 113) as f64).collect();
        let (alpha, beta) = (0.6, 0.4);
        let combo: Vec<f64> = xs
            .iter()
            .zip(&ys)
            .map(|(&x, &y)| alpha * x + beta * y)
            .collect();
        let hx = minute_series(start, xs).trailing_mean(60, 1.0).unwrap();
        let hy = minute_series(start, ys).trailing_mean(60, 1.0).unwrap();
        let hc = minute_series(start, combo).trailing_mean(60, 1.0).unwrap();
        for i in 0..hc.len() {
            if hc.is_valid(i) {
                let expect = alpha * hx.value(i) + beta * hy.value(i);
                assert!((hc.value(i) - expect).abs() < 1e-9);
            }
        }
    }

    proptest! {
        #[test]
        fn serialize_parse_round_trip(
            start_min in 0i64..10_000_000,
            values in proptest::collection::vec(0.0f64..1500.0, 1..200),
        ) {
            let n = values.len();
            let original = MinuteSeries::new(start_min * 60, 60, values, vec![true; n]).unwrap();
            let parsed = parse_csv(&serialize(&original)).unwrap();
            prop_assert_eq!(parsed.series, original);
            prop_assert_eq!(parsed.gaps, 0);
        }
    }
}
