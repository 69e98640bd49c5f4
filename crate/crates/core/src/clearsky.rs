//! Simplified broadband clear-sky irradiance and the clear-sky index.
//!
//! Cloud-free global irradiance is modeled as
//!
//! ```text
//! G(h) = i0_adj * exp(-tau / sin(h)^g) * sin(h)       for elevation h > 0
//! G(h) = 0                                            otherwise
//! ```
//!
//! with a broadband optical depth `tau`, an elevation exponent `g`, and an
//! enhanced top-of-atmosphere irradiance `i0_adj`. The clear-sky index kt* is
//! the ratio of a measurement to this curve; it is the detrending quantity
//! behind scaled persistence and the index-space MLP.

use crate::series::{SeriesError, SeriesKind, SteppedSeries, TimeSampled};
use crate::solar::{elevation_deg, SiteConfig};
use thiserror::Error;

/// Below this clear-sky irradiance the index denominator is considered
/// ill-conditioned and the slot is invalidated instead of divided.
pub const DEFAULT_CLEAR_SKY_FLOOR_WM2: f64 = 20.0;

/// Cloud-enhancement spikes can push measurements above the clear-sky curve;
/// the index is capped here so outliers cannot dominate training.
pub const CLEAR_SKY_INDEX_CAP: f64 = 2.0;

#[derive(Debug, Error)]
pub enum ClearSkyError {
    #[error("tau must be positive, got {0}")]
    BadTau(f64),
    #[error("g must lie in (0, 1.5], got {0}")]
    BadExponent(f64),
    #[error("i0_adj must be positive, got {0}")]
    BadI0(f64),
    #[error("floor must be positive, got {0}")]
    BadFloor(f64),
    #[error("need at least {need} daylight samples to calibrate, found {got}")]
    TooFewDaylightSamples { got: usize, need: usize },
    #[error(transparent)]
    Series(#[from] SeriesError),
}

/// Parameters of the simplified clear-sky curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolisParams {
    /// Broadband atmospheric optical depth.
    pub tau: f64,
    /// Elevation exponent applied to sin(h) inside the attenuation term.
    pub g: f64,
    /// Enhanced top-of-atmosphere irradiance, W/m².
    pub i0_adj_wm2: f64,
}

impl SolisParams {
    pub fn new(tau: f64, g: f64, i0_adj_wm2: f64) -> Result<Self, ClearSkyError> {
        if !(tau.is_finite() && tau > 0.0) {
            return Err(ClearSkyError::BadTau(tau));
        }
        if !(g.is_finite() && g > 0.0 && g <= 1.5) {
            return Err(ClearSkyError::BadExponent(g));
        }
        if !(i0_adj_wm2.is_finite() && i0_adj_wm2 > 0.0) {
            return Err(ClearSkyError::BadI0(i0_adj_wm2));
        }
        Ok(Self { tau, g, i0_adj_wm2 })
    }
}

impl Default for SolisParams {
    fn default() -> Self {
        Self {
            tau: 0.35,
            g: 0.55,
            i0_adj_wm2: 1450.0,
        }
    }
}

/// Clear-sky global irradiance for a given solar elevation, W/m².
pub fn irradiance_at_elevation(params: &SolisParams, elevation_deg: f64) -> f64 {
    if elevation_deg <= 0.0 {
        return 0.0;
    }
    let sin_h = elevation_deg.to_radians().sin();
    params.i0_adj_wm2 * (-params.tau / sin_h.powf(params.g)).exp() * sin_h
}

/// Clear-sky global irradiance at a UTC epoch, W/m².
pub fn solis_irradiance(site: &SiteConfig, params: &SolisParams, epoch: i64) -> f64 {
    irradiance_at_elevation(params, elevation_deg(site, epoch))
}

/// Clear-sky series on the same grid and of the same kind as `like`.
///
/// For an irradiance series this is the curve sampled at the grid marks; for
/// an irradiation series it is the trailing mean of the minute-resolution
/// curve over each output step, mirroring how the measured series was built.
pub fn clear_sky_companion(
    like: &SteppedSeries,
    site: &SiteConfig,
    params: &SolisParams,
) -> SteppedSeries {
    let n = like.len();
    let mut values = Vec::with_capacity(n);
    match like.kind() {
        SeriesKind::Irradiance => {
            for i in 0..n {
                values.push(solis_irradiance(site, params, like.epoch_at(i)));
            }
        }
        SeriesKind::Irradiation => {
            // Chronological summation, matching how the measured trailing
            // mean is accumulated.
            let window = like.step_s() / 60;
            for i in 0..n {
                let mark = like.epoch_at(i);
                let window_start = mark - (window - 1) * 60;
                let sum: f64 = (0..window)
                    .map(|k| solis_irradiance(site, params, window_start + k * 60))
                    .sum();
                values.push(sum / window as f64);
            }
        }
    }
    SteppedSeries::from_parts(
        like.start_epoch(),
        like.step_s(),
        values,
        vec![true; n],
        like.kind(),
    )
    .expect("clear-sky values are bounded")
}

/// Dimensionless clear-sky index kt* on the grid of its source series.
#[derive(Debug, Clone, PartialEq)]
pub struct ClearSkyIndexSeries {
    start_epoch: i64,
    step_s: i64,
    values: Vec<f64>,
    valid: Vec<bool>,
}

impl ClearSkyIndexSeries {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn valid(&self) -> &[bool] {
        &self.valid
    }

    pub fn value(&self, index: usize) -> f64 {
        self.values[index]
    }
}

impl TimeSampled for ClearSkyIndexSeries {
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

/// kt* = measured / clear-sky, capped at [`CLEAR_SKY_INDEX_CAP`]. Slots where
/// the clear-sky value sits below `floor_wm2`, or where the measurement is
/// invalid, are marked invalid.
pub fn clear_sky_index(
    measured: &SteppedSeries,
    site: &SiteConfig,
    params: &SolisParams,
    floor_wm2: f64,
) -> Result<ClearSkyIndexSeries, ClearSkyError> {
    let companion = clear_sky_companion(measured, site, params);
    clear_sky_index_against(measured, &companion, floor_wm2)
}

/// Same as [`clear_sky_index`] but with a precomputed companion series
/// (must share the measured grid).
pub fn clear_sky_index_against(
    measured: &SteppedSeries,
    clear_sky: &SteppedSeries,
    floor_wm2: f64,
) -> Result<ClearSkyIndexSeries, ClearSkyError> {
    if !(floor_wm2.is_finite() && floor_wm2 > 0.0) {
        return Err(ClearSkyError::BadFloor(floor_wm2));
    }
    if clear_sky.start_epoch() != measured.start_epoch()
        || clear_sky.step_s() != measured.step_s()
        || clear_sky.len() != measured.len()
    {
        return Err(ClearSkyError::Series(SeriesError::LengthMismatch {
            values: measured.len(),
            valid: clear_sky.len(),
        }));
    }
    let n = measured.len();
    let mut values = vec![0.0; n];
    let mut valid = vec![false; n];
    for i in 0..n {
        let cs = clear_sky.value(i);
        if measured.is_valid(i) && cs >= floor_wm2 {
            values[i] = (measured.value(i) / cs).min(CLEAR_SKY_INDEX_CAP);
            valid[i] = true;
        }
    }
    Ok(ClearSkyIndexSeries {
        start_epoch: measured.start_epoch(),
        step_s: measured.step_s(),
        values,
        valid,
    })
}

/// Fits (tau, g, i0_adj) to the upper envelope of a measured minute series.
///
/// Samples above 1 degree elevation are binned by elevation; the per-bin
/// maximum is taken as a cloud-free envelope point. `tau` and `g` are then
/// refined by coordinate descent, with `i0_adj` profiled out exactly at each
/// step (it enters linearly). Returns the defaults unchanged if the fit
/// diverges.
pub fn calibrate_solis(
    clear_days: &crate::series::MinuteSeries,
    site: &SiteConfig,
) -> Result<SolisParams, ClearSkyError> {
    const MIN_DAYLIGHT_SAMPLES: usize = 100;
    const BIN_DEG: f64 = 1.0;

    let mut daylight: Vec<(f64, f64)> = Vec::new();
    for i in 0..clear_days.len() {
        if !clear_days.is_valid(i) {
            continue;
        }
        let el = elevation_deg(site, clear_days.epoch_at(i));
        if el > 1.0 {
            daylight.push((el, clear_days.value(i)));
        }
    }
    if daylight.len() < MIN_DAYLIGHT_SAMPLES {
        return Err(ClearSkyError::TooFewDaylightSamples {
            got: daylight.len(),
            need: MIN_DAYLIGHT_SAMPLES,
        });
    }

    // Upper envelope: the strongest sample per elevation bin.
    let mut envelope: Vec<(f64, f64)> = Vec::new();
    let n_bins = (90.0 / BIN_DEG) as usize;
    let mut best: Vec<Option<(f64, f64)>> = vec![None; n_bins];
    for &(el, v) in &daylight {
        let bin = ((el / BIN_DEG) as usize).min(n_bins - 1);
        if best[bin].is_none_or(|(_, bv)| v > bv) {
            best[bin] = Some((el, v));
        }
    }
    for point in best.into_iter().flatten() {
        envelope.push(point);
    }

    // For fixed (tau, g) the optimal i0 is a linear least-squares ratio.
    let profile_i0 = |tau: f64, g: f64| -> (f64, f64) {
        let mut num = 0.0;
        let mut den = 0.0;
        for &(el, v) in &envelope {
            let basis = irradiance_at_elevation(
                &SolisParams { tau, g, i0_adj_wm2: 1.0 },
                el,
            );
            num += v * basis;
            den += basis * basis;
        }
        if den <= 0.0 {
            return (f64::NAN, f64::INFINITY);
        }
        let i0 = num / den;
        let loss: f64 = envelope
            .iter()
            .map(|&(el, v)| {
                let m =
                    irradiance_at_elevation(&SolisParams { tau, g, i0_adj_wm2: i0 }, el);
                (m - v) * (m - v)
            })
            .sum();
        (i0, loss)
    };

    const TAU_RANGE: (f64, f64) = (0.02, 1.5);
    const G_RANGE: (f64, f64) = (0.05, 1.5);
    let defaults = SolisParams::default();

    // Coarse scan to land in the right basin; tau and g are correlated and a
    // descent started from the defaults can stall on the valley wall.
    let (mut tau, mut g) = (defaults.tau, defaults.g);
    let mut best_loss = f64::INFINITY;
    const COARSE: usize = 24;
    for i in 0..=COARSE {
        let cand_tau = TAU_RANGE.0 + (TAU_RANGE.1 - TAU_RANGE.0) * i as f64 / COARSE as f64;
        for j in 0..=COARSE {
            let cand_g = G_RANGE.0 + (G_RANGE.1 - G_RANGE.0) * j as f64 / COARSE as f64;
            let (_, loss) = profile_i0(cand_tau, cand_g);
            if loss < best_loss {
                best_loss = loss;
                tau = cand_tau;
                g = cand_g;
            }
        }
    }

    // Coordinate descent with exact (golden-section) line minimizations. The
    // loss valley is elongated along a tau-g tradeoff, so each sweep makes a
    // fixed fractional step along it; many cheap sweeps converge reliably.
    let golden = |f: &dyn Fn(f64) -> f64, mut lo: f64, mut hi: f64| -> f64 {
        const INV_PHI: f64 = 0.618_033_988_749_894_9;
        let mut a = hi - INV_PHI * (hi - lo);
        let mut b = lo + INV_PHI * (hi - lo);
        let (mut fa, mut fb) = (f(a), f(b));
        for _ in 0..60 {
            if fa < fb {
                hi = b;
                b = a;
                fb = fa;
                a = hi - INV_PHI * (hi - lo);
                fa = f(a);
            } else {
                lo = a;
                a = b;
                fa = fb;
                b = lo + INV_PHI * (hi - lo);
                fb = f(b);
            }
        }
        0.5 * (lo + hi)
    };
    let tau_radius = 2.0 * (TAU_RANGE.1 - TAU_RANGE.0) / COARSE as f64;
    let g_radius = 2.0 * (G_RANGE.1 - G_RANGE.0) / COARSE as f64;
    for _ in 0..200 {
        let g_now = g;
        tau = golden(
            &|t| profile_i0(t, g_now).1,
            (tau - tau_radius).max(TAU_RANGE.0),
            (tau + tau_radius).min(TAU_RANGE.1),
        );
        let tau_now = tau;
        g = golden(
            &|gg| profile_i0(tau_now, gg).1,
            (g - g_radius).max(G_RANGE.0),
            (g + g_radius).min(G_RANGE.1),
        );
    }

    let (i0, loss) = profile_i0(tau, g);
    if !(loss.is_finite() && i0.is_finite() && i0 > 0.0) {
        return Ok(defaults);
    }
    SolisParams::new(tau, g, i0).or(Ok(defaults))
}
