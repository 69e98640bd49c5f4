//! Windowed estimation of the local trend and its derivative, and the
//! trend/fluctuation decomposition of a series.
//!
//! A series is viewed, over a short trailing window `[anchor - L, anchor]`,
//! as an affine model `x(tau) ~= a0 + a1 tau` (tau measured from the window
//! start) plus quick fluctuations. The coefficients come from the first two
//! moment integrals of the windowed signal,
//!
//! ```text
//! I0 = integral of x dtau        I1 = integral of tau x dtau
//! ```
//!
//! realized as uniform-weight sums over the samples and solved against the
//! same-quadrature moments of `1, tau, tau^2`. Iterated window integrals act
//! as low-pass filters, so the fit attenuates fluctuations instead of
//! differentiating them; on a uniform grid the estimator coincides exactly
//! with an unweighted least-squares line fit. The slope `a1` is the
//! derivative estimate; the model value at the window's right edge is the
//! trend value used for extrapolation.

use crate::series::{MinuteSeries, TimeSampled};
use thiserror::Error;

/// Default window for the trend level, seconds (10 minutes).
pub const DEFAULT_TREND_WINDOW_S: i64 = 600;

/// Default window for the trend derivative, seconds (75 minutes). The slope
/// needs a longer window than the level for the same noise attenuation.
pub const DEFAULT_DERIVATIVE_WINDOW_S: i64 = 4500;

/// Minimum fraction of valid samples required inside a window.
pub const MIN_WINDOW_VALID_FRACTION: f64 = 0.9;

const MIN_WINDOW_SAMPLES: usize = 5;

#[derive(Debug, Error)]
pub enum TrendError {
    #[error("window holds {got} valid samples, need at least {need}")]
    TooFewSamples { got: usize, need: usize },
    #[error("window offsets must be strictly increasing and within [0, {window_s}]")]
    BadOffsets { window_s: f64 },
    #[error("window [{start}, {anchor}] not covered by the series")]
    WindowOutsideSeries { start: i64, anchor: i64 },
    #[error("anchor {0} is not on the series grid")]
    AnchorOffGrid(i64),
    #[error("window has {got} of {total} samples valid, below the {need_fraction} fraction")]
    SparseWindow {
        got: usize,
        total: usize,
        need_fraction: f64,
    },
    #[error("non-finite sample in window")]
    NonFiniteSample,
}

/// Affine model fitted over one window: value `a0` at the window start and
/// slope `a1` in signal units per second.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrendEstimate {
    pub a0: f64,
    pub a1_per_s: f64,
    pub window_s: f64,
    /// Right edge of the window (the most recent instant).
    pub anchor_epoch: i64,
}

impl TrendEstimate {
    /// Model value at the anchor, `a0 + a1 * window`.
    pub fn value_at_anchor(&self) -> f64 {
        self.a0 + self.a1_per_s * self.window_s
    }
}

/// Fits the affine window model to `(tau, x)` samples, `tau` in seconds from
/// the window start, strictly increasing within `[0, window_s]`.
///
/// Returns `(a0, a1)`.
pub fn fit_local_linear(
    samples: &[(f64, f64)],
    window_s: f64,
) -> Result<(f64, f64), TrendError> {
    if samples.len() < MIN_WINDOW_SAMPLES {
        return Err(TrendError::TooFewSamples {
            got: samples.len(),
            need: MIN_WINDOW_SAMPLES,
        });
    }
    let mut prev = f64::NEG_INFINITY;
    for &(tau, x) in samples {
        if !(tau.is_finite() && x.is_finite()) {
            return Err(TrendError::NonFiniteSample);
        }
        if tau <= prev || tau < 0.0 || tau > window_s {
            return Err(TrendError::BadOffsets { window_s });
        }
        prev = tau;
    }

    // Uniform-weight moment sums; the common sample weight cancels between
    // the signal moments (I0, I1) and the tau moments, so means suffice.
    // Centering tau and x keeps the 2x2 solve well conditioned.
    let n = samples.len() as f64;
    let tau_mean = samples.iter().map(|&(t, _)| t).sum::<f64>() / n;
    let x_mean = samples.iter().map(|&(_, x)| x).sum::<f64>() / n;
    let mut s_tt = 0.0;
    let mut s_tx = 0.0;
    for &(tau, x) in samples {
        let dt = tau - tau_mean;
        s_tt += dt * dt;
        s_tx += dt * (x - x_mean);
    }
    if s_tt <= 0.0 {
        return Err(TrendError::BadOffsets { window_s });
    }
    let a1 = s_tx / s_tt;
    let a0 = x_mean - a1 * tau_mean;
    Ok((a0, a1))
}

/// Fits the window `[anchor - window_s, anchor]` of a minute series.
///
/// The window must lie inside the series and hold at least
/// [`MIN_WINDOW_VALID_FRACTION`] of its samples valid; invalid samples are
/// simply left out of the moment sums.
pub fn window_fit(
    series: &MinuteSeries,
    anchor_epoch: i64,
    window_s: i64,
) -> Result<TrendEstimate, TrendError> {
    let step = series.step_s();
    let window_start = anchor_epoch - window_s;
    if (anchor_epoch - series.start_epoch()) % step != 0 {
        return Err(TrendError::AnchorOffGrid(anchor_epoch));
    }
    if window_start < series.start_epoch() || anchor_epoch > series.end_epoch() {
        return Err(TrendError::WindowOutsideSeries {
            start: window_start,
            anchor: anchor_epoch,
        });
    }
    // First grid index at or after the window start.
    let first = ((window_start - series.start_epoch() + step - 1).div_euclid(step)) as usize;
    let last = series.index_of(anchor_epoch).expect("anchor within series");

    let total = last - first + 1;
    let mut samples = Vec::with_capacity(total);
    for idx in first..=last {
        if series.is_valid(idx) {
            let tau = (series.epoch_at(idx) - window_start) as f64;
            samples.push((tau, series.value(idx)));
        }
    }
    if (samples.len() as f64) < MIN_WINDOW_VALID_FRACTION * total as f64 {
        return Err(TrendError::SparseWindow {
            got: samples.len(),
            total,
            need_fraction: MIN_WINDOW_VALID_FRACTION,
        });
    }
    let (a0, a1) = fit_local_linear(&samples, window_s as f64)?;
    Ok(TrendEstimate {
        a0,
        a1_per_s: a1,
        window_s: window_s as f64,
        anchor_epoch,
    })
}

/// Trend value at the anchor from a trailing window fit.
pub fn trend(series: &MinuteSeries, anchor_epoch: i64, window_s: i64) -> Result<f64, TrendError> {
    window_fit(series, anchor_epoch, window_s).map(|e| e.value_at_anchor())
}

/// Trend derivative (signal units per second) at the anchor.
pub fn trend_derivative(
    series: &MinuteSeries,
    anchor_epoch: i64,
    window_s: i64,
) -> Result<f64, TrendError> {
    window_fit(series, anchor_epoch, window_s).map(|e| e.a1_per_s)
}

/// A series split into its windowed trend and the quick fluctuations around
/// it; `trend + fluctuation` reconstructs the input exactly at every slot
/// where both are valid.
#[derive(Debug, Clone)]
pub struct Decomposition {
    pub trend: MinuteSeries,
    pub fluctuation: MinuteSeries,
}

/// Per-slot trend/fluctuation split. Slots without a full trailing window
/// (or with too many invalid samples in it) are invalid in both parts.
pub fn decompose(series: &MinuteSeries, window_s: i64) -> Decomposition {
    let n = series.len();
    let mut trend_values = vec![0.0; n];
    let mut fluct_values = vec![0.0; n];
    let mut valid = vec![false; n];
    for i in 0..n {
        if !series.is_valid(i) {
            continue;
        }
        if let Ok(t) = trend(series, series.epoch_at(i), window_s) {
            trend_values[i] = t;
            fluct_values[i] = series.value(i) - t;
            valid[i] = true;
        }
    }
    // Trend values can leave the measurement range (extrapolated line) and
    // fluctuations are signed, so the physical ceiling does not apply here.
    let trend = build_unchecked(series, trend_values, valid.clone());
    let fluctuation = build_unchecked(series, fluct_values, valid);
    Decomposition { trend, fluctuation }
}

fn build_unchecked(like: &MinuteSeries, values: Vec<f64>, valid: Vec<bool>) -> MinuteSeries {
    MinuteSeries::with_ceiling(
        like.start_epoch(),
        like.step_s(),
        values,
        valid,
        f64::INFINITY,
    )
    .expect("grid parameters from an existing series")
}
