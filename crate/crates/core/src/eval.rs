//! Normalized L1/L2 error norms and per-method comparison reports.
//!
//! Scores are computed over the valid records of one method:
//!
//! ```text
//! nL1 = sum |predicted - observed| / sum |observed|
//! nL2 = sqrt(sum (predicted - observed)^2) / sqrt(sum observed^2)
//! ```
//!
//! A zero denominator makes the score undefined (reported, never coerced to
//! zero). Scaled-persistence records that fell back to plain persistence are
//! included by default; `EvalOptions::exclude_fallback` removes them for
//! sensitivity runs.

use crate::forecast::{ForecastRecord, Method, MethodTag};
use crate::series::SeriesKind;
use serde::Serialize;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("no valid records")]
    NoRecords,
    #[error("normalization denominator is zero; the score is undefined")]
    UndefinedScore,
    #[error("baseline must be positive, got {0}")]
    BadBaseline(f64),
}

/// Which norm to rank by.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    L1,
    L2,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct EvalOptions {
    /// Drop scaled-persistence fallback records from the sums.
    pub exclude_fallback: bool,
}

/// Run description carried into the report.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct EvalMeta {
    pub horizon_minutes: u32,
    pub step_minutes: u32,
    pub target_kind: SeriesKind,
    pub test_year: i32,
}

/// Scores of one method variant.
#[derive(Debug, Clone, Serialize)]
pub struct MethodScore {
    pub tag: MethodTag,
    /// `None` when undefined (no valid records or zero denominator).
    pub n_l1: Option<f64>,
    pub n_l2: Option<f64>,
    pub n_valid: usize,
    pub n_invalid: usize,
    pub n_fallback: usize,
}

/// Per-method normalized scores for one benchmark run.
#[derive(Debug, Clone, Serialize)]
pub struct EvalReport {
    pub meta: EvalMeta,
    /// Entries in fixed method order, learning sizes ascending.
    pub scores: Vec<MethodScore>,
    /// Improvement of WM over SP under nL2, percent, when both are defined.
    pub wm_over_sp_improvement_pct: Option<f64>,
}

fn included<'a>(
    records: &'a [ForecastRecord],
    opts: &EvalOptions,
) -> impl Iterator<Item = &'a ForecastRecord> + 'a {
    let exclude_fallback = opts.exclude_fallback;
    records
        .iter()
        .filter(move |r| r.valid && !(exclude_fallback && r.fallback))
}

/// Sum of absolute errors over the sum of absolute observations.
pub fn normalized_l1(records: &[&ForecastRecord]) -> Result<f64, EvalError> {
    if records.is_empty() {
        return Err(EvalError::NoRecords);
    }
    let num: f64 = records.iter().map(|r| (r.predicted - r.observed).abs()).sum();
    let den: f64 = records.iter().map(|r| r.observed.abs()).sum();
    if den > 0.0 {
        Ok(num / den)
    } else {
        Err(EvalError::UndefinedScore)
    }
}

/// Root-sum-square error over the root-sum-square observation.
pub fn normalized_l2(records: &[&ForecastRecord]) -> Result<f64, EvalError> {
    if records.is_empty() {
        return Err(EvalError::NoRecords);
    }
    let num: f64 = records
        .iter()
        .map(|r| (r.predicted - r.observed) * (r.predicted - r.observed))
        .sum();
    let den: f64 = records.iter().map(|r| r.observed * r.observed).sum();
    if den > 0.0 {
        Ok((num / den).sqrt())
    } else {
        Err(EvalError::UndefinedScore)
    }
}

/// Improvement of score `a` over baseline `b`, percent: `100 (b - a) / b`.
pub fn relative_improvement(a: f64, b: f64) -> Result<f64, EvalError> {
    if !(b > 0.0) {
        return Err(EvalError::BadBaseline(b));
    }
    Ok(100.0 * (b - a) / b)
}

/// Groups records by method tag and scores each group.
pub fn evaluate(records: &[ForecastRecord], opts: EvalOptions, meta: EvalMeta) -> EvalReport {
    let mut groups: BTreeMap<MethodTag, Vec<&ForecastRecord>> = BTreeMap::new();
    let mut invalid: BTreeMap<MethodTag, usize> = BTreeMap::new();
    let mut fallback: BTreeMap<MethodTag, usize> = BTreeMap::new();
    for r in records {
        groups.entry(r.tag).or_default();
        if !r.valid {
            *invalid.entry(r.tag).or_default() += 1;
        } else if r.fallback {
            *fallback.entry(r.tag).or_default() += 1;
        }
    }
    for r in included(records, &opts) {
        groups.get_mut(&r.tag).expect("group created above").push(r);
    }

    let scores: Vec<MethodScore> = groups
        .into_iter()
        .map(|(tag, rs)| MethodScore {
            tag,
            n_l1: normalized_l1(&rs).ok(),
            n_l2: normalized_l2(&rs).ok(),
            n_valid: rs.len(),
            n_invalid: invalid.get(&tag).copied().unwrap_or(0),
            n_fallback: fallback.get(&tag).copied().unwrap_or(0),
        })
        .collect();

    let score_of = |m: Method| -> Option<f64> {
        scores
            .iter()
            .filter(|s| s.tag.method == m)
            .filter_map(|s| s.n_l2)
            .next()
    };
    let wm_over_sp_improvement_pct = match (score_of(Method::Wm), score_of(Method::Sp)) {
        (Some(wm), Some(sp)) => relative_improvement(wm, sp).ok(),
        _ => None,
    };

    EvalReport {
        meta,
        scores,
        wm_over_sp_improvement_pct,
    }
}

/// Tags ordered best-first under the chosen metric. Undefined scores sort
/// last; ties break by the fixed method order.
pub fn rank_methods(report: &EvalReport, metric: Metric) -> Vec<MethodTag> {
    let mut entries: Vec<(&MethodScore, Option<f64>)> = report
        .scores
        .iter()
        .map(|s| {
            let v = match metric {
                Metric::L1 => s.n_l1,
                Metric::L2 => s.n_l2,
            };
            (s, v)
        })
        .collect();
    entries.sort_by(|(sa, va), (sb, vb)| match (va, vb) {
        (Some(a), Some(b)) => a.partial_cmp(b).unwrap().then(sa.tag.cmp(&sb.tag)),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => sa.tag.cmp(&sb.tag),
    });
    entries.into_iter().map(|(s, _)| s.tag).collect()
}

impl EvalReport {
    /// Aligned plain-text table, one row per method variant.
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "target: {}   horizon: {} min   step: {} min   test year: {}\n",
            self.meta.target_kind,
            self.meta.horizon_minutes,
            self.meta.step_minutes,
            self.meta.test_year
        ));
        out.push_str(&format!(
            "{:<12} {:>8} {:>8} {:>8} {:>8} {:>9}\n",
            "method", "nL1", "nL2", "valid", "invalid", "fallback"
        ));
        for s in &self.scores {
            let fmt = |v: Option<f64>| match v {
                Some(x) => format!("{x:.4}"),
                None => "n/a".to_string(),
            };
            out.push_str(&format!(
                "{:<12} {:>8} {:>8} {:>8} {:>8} {:>9}\n",
                s.tag.to_string(),
                fmt(s.n_l1),
                fmt(s.n_l2),
                s.n_valid,
                s.n_invalid,
                s.n_fallback
            ));
        }
        if let Some(pct) = self.wm_over_sp_improvement_pct {
            out.push_str(&format!("WM improvement over SP (nL2): {pct:.1}%\n"));
        }
        out
    }

    /// Machine-readable CSV, one row per method variant.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("method,n_l1,n_l2,n_valid,n_invalid,n_fallback\n");
        for s in &self.scores {
            let fmt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                s.tag,
                fmt(s.n_l1),
                fmt(s.n_l2),
                s.n_valid,
                s.n_invalid,
                s.n_fallback
            ));
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn score(&self, tag: MethodTag) -> Option<&MethodScore> {
        self.scores.iter().find(|s| s.tag == tag)
    }

    /// First score entry for a base method, any learning size.
    pub fn score_for_method(&self, method: Method) -> Option<&MethodScore> {
        self.scores.iter().find(|s| s.tag.method == method)
    }
}
