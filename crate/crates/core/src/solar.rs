//! Sun position and daylight masking.
//!
//! Positions come from the NOAA low-accuracy algorithm in its fractional-year
//! form: declination and the equation of time as short trigonometric series
//! in the year angle, hour angle from true solar time, and elevation from
//! `sin h = sin phi sin delta + cos phi cos delta cos H`. Typical accuracy is
//! a few tenths of a degree, which is far below the noise floor of anything
//! downstream. No atmospheric refraction is applied.

use crate::series::TimeSampled;
use chrono::{DateTime, Datelike, TimeZone, Timelike, Utc};
use thiserror::Error;

/// Default elevation threshold for the daylight mask. Near-horizon samples
/// are excluded because the clear-sky denominator is ill-conditioned there.
pub const DEFAULT_MIN_ELEVATION_DEG: f64 = 1.0;

#[derive(Debug, Error)]
pub enum SolarError {
    #[error("latitude {0} outside [-90, 90]")]
    BadLatitude(f64),
    #[error("longitude {0} outside [-180, 180]")]
    BadLongitude(f64),
    #[error("altitude {0} below -430 m")]
    BadAltitude(f64),
}

/// Observation site. The altitude is carried for completeness; the simplified
/// clear-sky model does not consume it.
#[derive(Debug, Clone, PartialEq)]
pub struct SiteConfig {
    pub latitude_deg: f64,
    pub longitude_deg: f64,
    pub altitude_m: f64,
    pub name: String,
}

impl SiteConfig {
    pub fn new(
        latitude_deg: f64,
        longitude_deg: f64,
        altitude_m: f64,
        name: impl Into<String>,
    ) -> Result<Self, SolarError> {
        if !(-90.0..=90.0).contains(&latitude_deg) {
            return Err(SolarError::BadLatitude(latitude_deg));
        }
        if !(-180.0..=180.0).contains(&longitude_deg) {
            return Err(SolarError::BadLongitude(longitude_deg));
        }
        if altitude_m < -430.0 || !altitude_m.is_finite() {
            return Err(SolarError::BadAltitude(altitude_m));
        }
        Ok(Self {
            latitude_deg,
            longitude_deg,
            altitude_m,
            name: name.into(),
        })
    }
}

impl Default for SiteConfig {
    /// Mid-latitude continental default (the station coordinates are an
    /// assumption, not a measured datum; override via configuration).
    fn default() -> Self {
        Self {
            latitude_deg: 48.66,
            longitude_deg: 6.16,
            altitude_m: 320.0,
            name: "default-site".to_string(),
        }
    }
}

/// Sun position at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SunPosition {
    /// Geometric elevation above the horizon, degrees in [-90, 90].
    pub elevation_deg: f64,
    /// Azimuth clockwise from north, degrees in [0, 360).
    pub azimuth_deg: f64,
    /// Solar declination, degrees in [-23.45, 23.45].
    pub declination_deg: f64,
    /// Equation of time, minutes in [-20, 20].
    pub eot_minutes: f64,
}

/// NOAA low-accuracy sun position for a UTC epoch.
///
/// Intended for epochs within roughly 1950-2100.
pub fn sun_position(site: &SiteConfig, epoch: i64) -> SunPosition {
    let dt: DateTime<Utc> = Utc.timestamp_opt(epoch, 0).single().expect("epoch in range");
    let days_in_year = if dt.date_naive().leap_year() { 366.0 } else { 365.0 };
    let frac_hour =
        dt.hour() as f64 + dt.minute() as f64 / 60.0 + dt.second() as f64 / 3600.0;
    let gamma = std::f64::consts::TAU / days_in_year
        * (dt.ordinal() as f64 - 1.0 + (frac_hour - 12.0) / 24.0);

    let eot_minutes = 229.18
        * (0.000075 + 0.001868 * gamma.cos()
            - 0.032077 * gamma.sin()
            - 0.014615 * (2.0 * gamma).cos()
            - 0.040849 * (2.0 * gamma).sin());
    // The trigonometric series overshoots the true extreme by ~0.002 deg
    // around the solstices; clamp to the documented range.
    let decl_deg = (0.006918 - 0.399912 * gamma.cos() + 0.070257 * gamma.sin()
        - 0.006758 * (2.0 * gamma).cos()
        + 0.000907 * (2.0 * gamma).sin()
        - 0.002697 * (3.0 * gamma).cos()
        + 0.00148 * (3.0 * gamma).sin())
    .to_degrees()
    .clamp(-23.45, 23.45);
    let decl_rad = decl_deg.to_radians();

    // True solar time in minutes; the input is UTC so no zone offset applies.
    let time_offset = eot_minutes + 4.0 * site.longitude_deg;
    let tst = frac_hour * 60.0 + time_offset;
    let ha_rad = (tst / 4.0 - 180.0).to_radians();

    let phi = site.latitude_deg.to_radians();
    let sin_el = phi.sin() * decl_rad.sin() + phi.cos() * decl_rad.cos() * ha_rad.cos();
    let elevation_deg = sin_el.clamp(-1.0, 1.0).asin().to_degrees();

    // Azimuth measured from south (westward positive), then shifted to the
    // north-clockwise convention.
    let az_south = ha_rad
        .sin()
        .atan2(ha_rad.cos() * phi.sin() - decl_rad.tan() * phi.cos());
    let azimuth_deg = (az_south.to_degrees() + 180.0).rem_euclid(360.0);

    SunPosition {
        elevation_deg,
        azimuth_deg,
        declination_deg: decl_deg,
        eot_minutes,
    }
}

/// Solar elevation in degrees at a UTC epoch.
pub fn elevation_deg(site: &SiteConfig, epoch: i64) -> f64 {
    sun_position(site, epoch).elevation_deg
}

/// True where the sample is valid and the sun stands above
/// `min_elevation_deg` at the sample timestamp.
///
/// `min_elevation_deg` is expected in [-5, 20]; 1 degree is the default.
pub fn daylight_mask(
    site: &SiteConfig,
    series: &impl TimeSampled,
    min_elevation_deg: f64,
) -> Vec<bool> {
    (0..series.len())
        .map(|i| {
            series.is_valid(i)
                && elevation_deg(site, series.epoch_at(i)) > min_elevation_deg
        })
        .collect()
}
