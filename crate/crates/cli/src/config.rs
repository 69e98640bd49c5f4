//! Flat `key = value` run configuration.
//!
//! Every key has a default; unknown keys are rejected so typos cannot
//! silently fall back. Lines starting with `#` and blank lines are ignored.
//!
//! ```text
//! site.lat = 48.66          site latitude, degrees
//! site.lon = 6.16           site longitude, degrees
//! site.alt = 320            site altitude, meters
//! site.name = default-site  label
//! solis.tau = 0.35          clear-sky optical depth
//! solis.g = 0.55            clear-sky elevation exponent
//! solis.i0_adj = 1450       enhanced top-of-atmosphere irradiance, W/m^2
//! bench.horizon_min = 60    forecast horizon, minutes
//! bench.step_min = 60       target series step, minutes
//! bench.target = irradiation | irradiance
//! bench.train_years = 2012  comma separated
//! bench.test_year = 2013
//! bench.methods = P,SP,WM,MLP,CSI_MLP
//! mlp.lags = 8
//! mlp.hidden = 10
//! mlp.lr = 0.05
//! mlp.momentum = 0.9
//! mlp.epochs = 600
//! mlp.patience = 60
//! mlp.seed = 1
//! mlp.runs = 7
//! eval.exclude_fallback = false
//! eval.daylight_min_elev = 1.0   degrees
//! ```

use suncast_core::eval::EvalOptions;
use suncast_core::forecast::{BenchmarkConfig, Method};
use suncast_core::mlp::TrainSpec;
use suncast_core::series::SeriesKind;
use suncast_core::{SiteConfig, SolisParams};

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub site: SiteConfig,
    pub solis: SolisParams,
    pub horizon_min: u32,
    pub step_min: u32,
    pub target: SeriesKind,
    pub train_years: Vec<i32>,
    pub test_year: i32,
    pub methods: Vec<Method>,
    pub train_spec: TrainSpec,
    pub runs: usize,
    pub exclude_fallback: bool,
    pub daylight_min_elev: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            site: SiteConfig::default(),
            solis: SolisParams::default(),
            horizon_min: 60,
            step_min: 60,
            target: SeriesKind::Irradiation,
            train_years: vec![2012],
            test_year: 2013,
            methods: Method::ALL.to_vec(),
            train_spec: TrainSpec::default(),
            runs: 7,
            exclude_fallback: false,
            daylight_min_elev: 1.0,
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut cfg = RunConfig::default();
        // Raw fields first; SiteConfig/SolisParams validate at the end.
        let (mut lat, mut lon, mut alt) = (
            cfg.site.latitude_deg,
            cfg.site.longitude_deg,
            cfg.site.altitude_m,
        );
        let mut name = cfg.site.name.clone();
        let (mut tau, mut g, mut i0) = (cfg.solis.tau, cfg.solis.g, cfg.solis.i0_adj_wm2);

        for (line_no, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| format!("line {}: expected `key = value`", line_no + 1))?;
            let key = key.trim();
            let value = value.trim();
            let ctx = |what: &str| format!("line {}: bad {what} `{value}`", line_no + 1);
            match key {
                "site.lat" => lat = value.parse().map_err(|_| ctx("latitude"))?,
                "site.lon" => lon = value.parse().map_err(|_| ctx("longitude"))?,
                "site.alt" => alt = value.parse().map_err(|_| ctx("altitude"))?,
                "site.name" => name = value.to_string(),
                "solis.tau" => tau = value.parse().map_err(|_| ctx("tau"))?,
                "solis.g" => g = value.parse().map_err(|_| ctx("exponent"))?,
                "solis.i0_adj" => i0 = value.parse().map_err(|_| ctx("irradiance"))?,
                "bench.horizon_min" => {
                    cfg.horizon_min = value.parse().map_err(|_| ctx("horizon"))?
                }
                "bench.step_min" => cfg.step_min = value.parse().map_err(|_| ctx("step"))?,
                "bench.target" => {
                    cfg.target = match value.to_ascii_lowercase().as_str() {
                        "irradiation" => SeriesKind::Irradiation,
                        "irradiance" => SeriesKind::Irradiance,
                        _ => return Err(ctx("target kind")),
                    }
                }
                "bench.train_years" => {
                    cfg.train_years = if value.is_empty() {
                        Vec::new()
                    } else {
                        value
                            .split(',')
                            .map(|t| t.trim().parse().map_err(|_| ctx("year list")))
                            .collect::<Result<_, _>>()?
                    }
                }
                "bench.test_year" => cfg.test_year = value.parse().map_err(|_| ctx("year"))?,
                "bench.methods" => {
                    cfg.methods = value
                        .split(',')
                        .map(|t| t.parse::<Method>().map_err(|e| format!("line {}: {e}", line_no + 1)))
                        .collect::<Result<_, _>>()?
                }
                "mlp.lags" => cfg.train_spec.n_lags = value.parse().map_err(|_| ctx("lags"))?,
                "mlp.hidden" => {
                    cfg.train_spec.n_hidden = value.parse().map_err(|_| ctx("hidden"))?
                }
                "mlp.lr" => {
                    cfg.train_spec.learning_rate = value.parse().map_err(|_| ctx("rate"))?
                }
                "mlp.momentum" => {
                    cfg.train_spec.momentum = value.parse().map_err(|_| ctx("momentum"))?
                }
                "mlp.epochs" => {
                    cfg.train_spec.max_epochs = value.parse().map_err(|_| ctx("epochs"))?
                }
                "mlp.patience" => {
                    cfg.train_spec.patience = value.parse().map_err(|_| ctx("patience"))?
                }
                "mlp.seed" => cfg.train_spec.seed = value.parse().map_err(|_| ctx("seed"))?,
                "mlp.runs" => cfg.runs = value.parse().map_err(|_| ctx("runs"))?,
                "eval.exclude_fallback" => {
                    cfg.exclude_fallback = value.parse().map_err(|_| ctx("flag"))?
                }
                "eval.daylight_min_elev" => {
                    cfg.daylight_min_elev = value.parse().map_err(|_| ctx("elevation"))?
                }
                other => return Err(format!("line {}: unknown key `{other}`", line_no + 1)),
            }
        }

        cfg.site = SiteConfig::new(lat, lon, alt, name).map_err(|e| e.to_string())?;
        cfg.solis = SolisParams::new(tau, g, i0).map_err(|e| e.to_string())?;
        Ok(cfg)
    }

    pub fn to_benchmark(&self) -> BenchmarkConfig {
        BenchmarkConfig {
            horizon_minutes: self.horizon_min,
            step_minutes: self.step_min,
            target_kind: self.target,
            train_years: self.train_years.clone(),
            test_year: self.test_year,
            site: self.site.clone(),
            solis: self.solis,
            train_spec: self.train_spec.clone(),
            train_runs: self.runs,
            methods: self.methods.clone(),
            daylight_min_elevation_deg: self.daylight_min_elev,
            ..BenchmarkConfig::default()
        }
    }

    pub fn eval_options(&self) -> EvalOptions {
        EvalOptions {
            exclude_fallback: self.exclude_fallback,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_gives_defaults() {
        let cfg = RunConfig::parse("").unwrap();
        assert_eq!(cfg.horizon_min, 60);
        assert_eq!(cfg.site.latitude_deg, 48.66);
        assert_eq!(cfg.methods.len(), 5);
    }

    #[test]
    fn parses_overrides_and_comments() {
        let text = "\
# quarter-hour run
bench.horizon_min = 15
bench.step_min = 5
bench.target = irradiance
bench.methods = SP,WM
bench.train_years =
site.lat = 41.9
mlp.seed = 9
eval.exclude_fallback = true
";
        let cfg = RunConfig::parse(text).unwrap();
        assert_eq!(cfg.horizon_min, 15);
        assert_eq!(cfg.step_min, 5);
        assert_eq!(cfg.target, SeriesKind::Irradiance);
        assert_eq!(cfg.methods, vec![Method::Sp, Method::Wm]);
        assert!(cfg.train_years.is_empty());
        assert_eq!(cfg.site.latitude_deg, 41.9);
        assert_eq!(cfg.train_spec.seed, 9);
        assert!(cfg.exclude_fallback);
    }

    #[test]
    fn unknown_keys_rejected() {
        let err = RunConfig::parse("bench.horizonmin = 60\n").unwrap_err();
        assert!(err.contains("unknown key"), "{err}");
    }

    #[test]
    fn bad_values_rejected() {
        assert!(RunConfig::parse("site.lat = north\n").is_err());
        assert!(RunConfig::parse("site.lat = 95\n").is_err());
        assert!(RunConfig::parse("bench.methods = P,XX\n").is_err());
        assert!(RunConfig::parse("just a line\n").is_err());
    }
}
