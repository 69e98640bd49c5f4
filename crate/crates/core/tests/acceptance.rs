//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line.
//!
//! Station studies of these methods rest on private logger archives, so no
//! reference scores exist to reproduce bit-for-bit; the criteria are instead
//! estimator-exactness bounds, oracle agreements, and qualitative method
//! orderings on seeded synthetic years.

use chrono::NaiveDate;
use std::sync::OnceLock;
use suncast_core::eval::{
    evaluate, normalized_l1, normalized_l2, relative_improvement, EvalMeta, EvalOptions,
    EvalReport,
};
use suncast_core::forecast::{
    run_benchmark, wm_forecast, BenchmarkConfig, ForecastRecord, Method, MethodTag,
};
use suncast_core::mlp::{best_of_runs, gradient_check, train, MlpModel, TrainSpec};
use suncast_core::rng::SplitMix64;
use suncast_core::series::{MinuteSeries, SeriesKind, TimeSampled};
use suncast_core::solar::{sun_position, SiteConfig};
use suncast_core::synth::{gen_days, CloudModel, Regime};
use suncast_core::trend::{fit_local_linear, trend_derivative};
use suncast_core::SolisParams;

fn check(name: &str, body: impl FnOnce() -> Result<String, String>) {
    match body() {
        Ok(detail) => println!("ACCEPTANCE {name}: PASS ({detail})"),
        Err(msg) => {
            println!("ACCEPTANCE {name}: FAIL ({msg})");
            panic!("{name}: {msg}");
        }
    }
}

fn date(y: i32, m: u32, d: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, d).unwrap()
}

fn minute_series(start: i64, values: Vec<f64>) -> MinuteSeries {
    let n = values.len();
    MinuteSeries::with_ceiling(start, 60, values, vec![true; n], f64::INFINITY).unwrap()
}

// ---------------------------------------------------------------------------
// Shared ten-seed benchmark fixture (broken-sky synthetic years, both target
// flavors, all five methods).

struct SeedRun {
    irradiance: EvalReport,
    irradiation: EvalReport,
}

fn broken_runs() -> &'static Vec<SeedRun> {
    static RUNS: OnceLock<Vec<SeedRun>> = OnceLock::new();
    RUNS.get_or_init(|| {
        let site = SiteConfig::default();
        let solis = SolisParams::default();
        (0..10u64)
            .map(|seed| {
                let cloud = CloudModel::regime(Regime::Broken, 1000 + seed);
                let data =
                    gen_days(&site, &solis, &cloud, date(2012, 1, 1), 731).unwrap();
                let run = |kind: SeriesKind| -> EvalReport {
                    let cfg = BenchmarkConfig {
                        target_kind: kind,
                        train_years: vec![2012],
                        test_year: 2013,
                        ..BenchmarkConfig::default()
                    };
                    let records = run_benchmark(&cfg, &data).unwrap();
                    evaluate(
                        &records,
                        EvalOptions::default(),
                        EvalMeta {
                            horizon_minutes: 60,
                            step_minutes: 60,
                            target_kind: kind,
                            test_year: 2013,
                        },
                    )
                };
                SeedRun {
                    irradiance: run(SeriesKind::Irradiance),
                    irradiation: run(SeriesKind::Irradiation),
                }
            })
            .collect()
    })
}

fn l2_of(report: &EvalReport, method: Method) -> f64 {
    report
        .score_for_method(method)
        .and_then(|s| s.n_l2)
        .unwrap_or(f64::NAN)
}

// ---------------------------------------------------------------------------

#[test]
fn acceptance_01_estimator_exact_on_affine_signals() {
    check("01 estimator exactness", || {
        let mut rng = SplitMix64::new(11);
        let mut worst_fit: f64 = 0.0;
        for _ in 0..50 {
            let a0 = rng.uniform(5.0, 800.0);
            let a1 = rng.uniform(-2.0, 2.0);
            let samples: Vec<(f64, f64)> = (0..=75)
                .map(|i| {
                    let tau = i as f64 * 60.0;
                    (tau, a0 + a1 * tau)
                })
                .collect();
            let (f0, f1) = fit_local_linear(&samples, 4500.0).map_err(|e| e.to_string())?;
            worst_fit = worst_fit
                .max((f0 - a0).abs() / a0.abs())
                .max((f1 - a1).abs() / a1.abs().max(1e-12));
        }
        if worst_fit >= 1e-9 {
            return Err(format!("affine recovery relative error {worst_fit:.3e}"));
        }

        let mut worst_wm: f64 = 0.0;
        for _ in 0..20 {
            let a0 = rng.uniform(100.0, 600.0);
            let a1_min = rng.uniform(-0.4, 0.4); // per minute
            let series =
                minute_series(1_360_000_800, (0..200).map(|i| a0 + a1_min * i as f64).collect());
            let issue = series.start_epoch() + 100 * 60;
            for horizon_min in [15i64, 60] {
                let want = a0 + a1_min * (100 + horizon_min) as f64;
                if want <= 0.0 {
                    continue;
                }
                let got = wm_forecast(&series, issue, horizon_min * 60)
                    .map_err(|e| format!("{e:?}"))?;
                worst_wm = worst_wm.max((got - want).abs() / want.abs());
            }
        }
        if worst_wm >= 1e-6 {
            return Err(format!("extrapolation relative error {worst_wm:.3e}"));
        }
        Ok(format!("fit err {worst_fit:.1e}, forecast err {worst_wm:.1e}"))
    });
}

#[test]
fn acceptance_02_estimator_agrees_with_least_squares() {
    check("02 oracle equivalence", || {
        // Independent oracle: raw normal equations.
        fn oracle(samples: &[(f64, f64)]) -> (f64, f64) {
            let n = samples.len() as f64;
            let st: f64 = samples.iter().map(|&(t, _)| t).sum();
            let stt: f64 = samples.iter().map(|&(t, _)| t * t).sum();
            let sx: f64 = samples.iter().map(|&(_, x)| x).sum();
            let stx: f64 = samples.iter().map(|&(t, x)| t * x).sum();
            let det = n * stt - st * st;
            ((stt * sx - st * stx) / det, (n * stx - st * sx) / det)
        }
        let mut rng = SplitMix64::new(22);
        let mut worst: f64 = 0.0;
        for _ in 0..1000 {
            let n = 11 + (rng.next_u64() % 66) as usize; // 10 to 75 minutes
            let a0 = rng.uniform(-400.0, 400.0);
            let a1 = rng.uniform(-3.0, 3.0);
            let sigma = rng.uniform(0.0, 80.0);
            let samples: Vec<(f64, f64)> = (0..n)
                .map(|i| {
                    let tau = i as f64 * 60.0;
                    (tau, a0 + a1 * tau + sigma * rng.normal())
                })
                .collect();
            let window = (n - 1) as f64 * 60.0;
            let (f0, f1) = fit_local_linear(&samples, window).map_err(|e| e.to_string())?;
            let (o0, o1) = oracle(&samples);
            worst = worst
                .max((f0 - o0).abs() / o0.abs().max(1e-3))
                .max((f1 - o1).abs() / o1.abs().max(1e-3));
        }
        if worst >= 1e-6 {
            return Err(format!("worst relative disagreement {worst:.3e}"));
        }
        Ok(format!("worst relative disagreement {worst:.1e} over 1000 windows"))
    });
}

#[test]
fn acceptance_03_longer_windows_attenuate_slope_noise() {
    check("03 noise attenuation", || {
        let start = 1_360_000_800i64;
        let windows = [900i64, 2700, 4500]; // 15, 45, 75 minutes
        let mut stds = Vec::new();
        for &w in &windows {
            let (mut sum, mut sumsq) = (0.0, 0.0);
            let runs = 500;
            for seed in 0..runs {
                let mut rng = SplitMix64::new(3000 + seed);
                let values: Vec<f64> = (0..76).map(|_| 300.0 + 60.0 * rng.normal()).collect();
                let series = minute_series(start, values);
                let a1 = trend_derivative(&series, start + 75 * 60, w)
                    .map_err(|e| e.to_string())?;
                sum += a1;
                sumsq += a1 * a1;
            }
            let mean = sum / runs as f64;
            stds.push((sumsq / runs as f64 - mean * mean).sqrt());
        }
        if !(stds[0] > stds[1] && stds[1] > stds[2]) {
            return Err(format!("slope stds not decreasing: {stds:?}"));
        }
        Ok(format!(
            "slope std {:.2e} > {:.2e} > {:.2e} across 15/45/75 min",
            stds[0], stds[1], stds[2]
        ))
    });
}

#[test]
fn acceptance_04_index_persistence_exact_on_clear_year() {
    check("04 scaled-persistence exactness", || {
        let site = SiteConfig::default();
        let solis = SolisParams::default();
        let cloud = CloudModel::regime(Regime::Clear, 77);
        let data = gen_days(&site, &solis, &cloud, date(2013, 1, 1), 365).unwrap();
        let cfg = BenchmarkConfig {
            methods: vec![Method::P, Method::Sp],
            train_years: vec![],
            test_year: 2013,
            target_kind: SeriesKind::Irradiance,
            ..BenchmarkConfig::default()
        };
        let records = run_benchmark(&cfg, &data).map_err(|e| e.to_string())?;
        // Fallback slots revert to plain persistence by design; exclude them
        // so the clear-sky ratio path itself is what gets measured.
        let report = evaluate(
            &records,
            EvalOptions {
                exclude_fallback: true,
            },
            EvalMeta {
                horizon_minutes: 60,
                step_minutes: 60,
                target_kind: SeriesKind::Irradiance,
                test_year: 2013,
            },
        );
        let sp = report.score(MethodTag::base(Method::Sp)).unwrap();
        let p = report.score(MethodTag::base(Method::P)).unwrap();
        let (sp_l1, sp_l2) = (sp.n_l1.unwrap_or(f64::NAN), sp.n_l2.unwrap_or(f64::NAN));
        let p_l2 = p.n_l2.unwrap_or(f64::NAN);
        if !(sp_l1 < 1e-6 && sp_l2 < 1e-6) {
            return Err(format!("SP nL1 {sp_l1:.3e}, nL2 {sp_l2:.3e} not < 1e-6"));
        }
        if !(p_l2 > 0.05) {
            return Err(format!("P nL2 {p_l2:.4} not > 0.05"));
        }
        Ok(format!(
            "SP nL1 {sp_l1:.1e}, nL2 {sp_l2:.1e}; P nL2 {p_l2:.3}"
        ))
    });
}

#[test]
fn acceptance_05_broken_sky_method_ordering() {
    check("05 qualitative ranking", || {
        let runs = broken_runs();
        let mut ordered = 0;
        let mut detail = String::new();
        for (i, run) in runs.iter().enumerate() {
            let p = l2_of(&run.irradiance, Method::P);
            let sp = l2_of(&run.irradiance, Method::Sp);
            let wm = l2_of(&run.irradiance, Method::Wm);
            if wm < sp && sp < p {
                ordered += 1;
            }
            if i == 0 {
                detail = format!("seed0: WM {wm:.4} < SP {sp:.4} < P {p:.4}");
            }
        }
        if ordered < 8 {
            return Err(format!("ordering held in only {ordered}/10 seeds"));
        }
        Ok(format!("{ordered}/10 seeds ordered; {detail}"))
    });
}

#[test]
fn acceptance_06_interval_means_never_score_worse() {
    check("06 smoothing benefit", || {
        let runs = broken_runs();
        let mut good_seeds = 0;
        for run in runs {
            let mut all_ok = true;
            for score in &run.irradiance.scores {
                let rad = score.n_l2;
                let ion = run.irradiation.score(score.tag).and_then(|s| s.n_l2);
                if let (Some(rad), Some(ion)) = (rad, ion) {
                    if ion > rad {
                        all_ok = false;
                    }
                }
            }
            if all_ok {
                good_seeds += 1;
            }
        }
        if good_seeds < 9 {
            return Err(format!("benefit held in only {good_seeds}/10 seeds"));
        }
        Ok(format!("{good_seeds}/10 seeds improved for every method"))
    });
}

#[test]
fn acceptance_07_network_gradients_determinism_and_selection() {
    check("07 network contracts", || {
        // Gradient check across 100 random models.
        let mut rng = SplitMix64::new(4242);
        let mut worst: f64 = 0.0;
        for i in 0..100 {
            let n_lags = 1 + (rng.next_u64() % 8) as usize;
            let n_hidden = 1 + (rng.next_u64() % 10) as usize;
            let model = MlpModel::init(&[n_lags, n_hidden, 1], 9000 + i, 1.0, 1.0).unwrap();
            let input: Vec<f64> = (0..n_lags).map(|_| rng.uniform(-2.0, 2.0)).collect();
            let target = rng.uniform(-1.0, 1.0);
            let err = gradient_check(&model, &input, target).map_err(|e| e.to_string())?;
            worst = worst.max(err);
        }
        if worst >= 1e-4 {
            return Err(format!("worst gradient error {worst:.3e}"));
        }

        // Byte-exact determinism per seed.
        let mut data_rng = SplitMix64::new(5);
        let dataset: Vec<(Vec<f64>, f64)> = (0..200)
            .map(|_| {
                let lags: Vec<f64> = (0..8).map(|_| data_rng.uniform(0.0, 1.0)).collect();
                let y = 0.4 * lags[0] + 0.1 * lags[3];
                (lags, y)
            })
            .collect();
        let spec = TrainSpec::default();
        let a = train(&dataset, &spec, 1.0, 1.0).map_err(|e| e.to_string())?;
        let b = train(&dataset, &spec, 1.0, 1.0).map_err(|e| e.to_string())?;
        if a.model.to_text().into_bytes() != b.model.to_text().into_bytes() {
            return Err("same seed produced different model bytes".to_string());
        }

        // Best-of-seven returns the argmin run.
        let best = best_of_runs(&dataset, &spec, 7, 1.0, 1.0).map_err(|e| e.to_string())?;
        let min_val = (0..7)
            .map(|i| {
                let s = TrainSpec {
                    seed: spec.seed + i,
                    ..spec.clone()
                };
                train(&dataset, &s, 1.0, 1.0).unwrap().val_nrmse.unwrap()
            })
            .fold(f64::INFINITY, f64::min);
        let got = best.val_nrmse.unwrap();
        if got != min_val {
            return Err(format!("best-of-7 {got} != argmin {min_val}"));
        }
        Ok(format!(
            "gradient err {worst:.1e}; byte-exact repeat; best-of-7 = argmin {min_val:.4}"
        ))
    });
}

#[test]
fn acceptance_08_metric_axioms_hold_on_random_record_sets() {
    check("08 metric axioms", || {
        let tag = MethodTag::base(Method::P);
        let record = |predicted: f64, observed: f64| ForecastRecord {
            issue_epoch: 0,
            horizon_s: 3600,
            tag,
            predicted,
            observed,
            valid: true,
            fallback: false,
        };
        let mut rng = SplitMix64::new(808);
        for case in 0..10_000 {
            let n = 1 + (rng.next_u64() % 40) as usize;
            let records: Vec<ForecastRecord> = (0..n)
                .map(|_| record(rng.uniform(0.0, 1000.0), rng.uniform(0.5, 1000.0)))
                .collect();
            let refs: Vec<&ForecastRecord> = records.iter().collect();
            let l1 = normalized_l1(&refs).map_err(|e| e.to_string())?;
            let l2 = normalized_l2(&refs).map_err(|e| e.to_string())?;
            if !(l1 >= 0.0 && l2 >= 0.0) {
                return Err(format!("case {case}: negative score"));
            }

            // Identity of indiscernibles: zero error iff predictions match.
            let perfect: Vec<ForecastRecord> =
                records.iter().map(|r| record(r.observed, r.observed)).collect();
            let refs: Vec<&ForecastRecord> = perfect.iter().collect();
            if normalized_l1(&refs).unwrap() != 0.0 || normalized_l2(&refs).unwrap() != 0.0 {
                return Err(format!("case {case}: perfect forecast scored nonzero"));
            }
            let any_off = records.iter().any(|r| r.predicted != r.observed);
            if any_off && (l1 == 0.0 || l2 == 0.0) {
                return Err(format!("case {case}: imperfect forecast scored zero"));
            }

            // Scale invariance.
            let alpha = rng.uniform(0.01, 100.0);
            let scaled: Vec<ForecastRecord> = records
                .iter()
                .map(|r| record(alpha * r.predicted, alpha * r.observed))
                .collect();
            let refs: Vec<&ForecastRecord> = scaled.iter().collect();
            if (normalized_l1(&refs).unwrap() - l1).abs() > 1e-9 * l1.max(1.0)
                || (normalized_l2(&refs).unwrap() - l2).abs() > 1e-9 * l2.max(1.0)
            {
                return Err(format!("case {case}: scaling changed a score"));
            }

            // Moving one prediction away from its observation never helps.
            let mut worse = records.clone();
            let k = (rng.next_u64() % n as u64) as usize;
            let push = rng.uniform(0.1, 100.0);
            worse[k].predicted = if worse[k].predicted >= worse[k].observed {
                worse[k].predicted + push
            } else {
                worse[k].predicted - push
            };
            let refs: Vec<&ForecastRecord> = worse.iter().collect();
            if normalized_l1(&refs).unwrap() < l1 - 1e-12
                || normalized_l2(&refs).unwrap() < l2 - 1e-12
            {
                return Err(format!("case {case}: worsening a prediction helped"));
            }
        }
        Ok("non-negativity, identity, scale invariance, monotonicity over 10^4 sets".to_string())
    });
}

#[test]
fn acceptance_09_quarter_hour_pipeline_runs_end_to_end() {
    check("09 quarter-hour pipeline", || {
        let site = SiteConfig::default();
        let solis = SolisParams::default();
        let mut wm_wins = 0;
        let mut first = String::new();
        for seed in 0..10u64 {
            let cloud = CloudModel::regime(Regime::Broken, 2000 + seed);
            let data = gen_days(&site, &solis, &cloud, date(2013, 1, 1), 365).unwrap();
            let cfg = BenchmarkConfig {
                methods: vec![Method::Sp, Method::Wm],
                train_years: vec![],
                test_year: 2013,
                horizon_minutes: 15,
                step_minutes: 5,
                target_kind: SeriesKind::Irradiance,
                ..BenchmarkConfig::default()
            };
            let records = run_benchmark(&cfg, &data).map_err(|e| e.to_string())?;
            let report = evaluate(
                &records,
                EvalOptions::default(),
                EvalMeta {
                    horizon_minutes: 15,
                    step_minutes: 5,
                    target_kind: SeriesKind::Irradiance,
                    test_year: 2013,
                },
            );
            let sp = l2_of(&report, Method::Sp);
            let wm = l2_of(&report, Method::Wm);
            let pct = relative_improvement(wm, sp).map_err(|e| e.to_string())?;
            if !pct.is_finite() {
                return Err("improvement not finite".to_string());
            }
            if wm < sp {
                wm_wins += 1;
            }
            if seed == 0 {
                first = format!("seed0: SP {sp:.4}, WM {wm:.4}, improvement {pct:.1}%");
            }
        }
        if wm_wins < 6 {
            return Err(format!("WM beat SP in only {wm_wins}/10 seeds"));
        }
        Ok(format!("{wm_wins}/10 seeds favored WM; {first}"))
    });
}

#[test]
fn acceptance_10_noon_elevation_matches_closed_form() {
    check("10 solar geometry", || {
        // At a solstice the declination sits at its +-23.44 degree extreme
        // and solar-noon elevation is 90 - |lat - decl|.
        let latitudes = [-55.0, -40.0, -25.0, -10.0, 0.0, 10.0, 25.0, 40.0, 48.66, 55.0];
        let cases: Vec<(f64, NaiveDate, f64)> = latitudes
            .iter()
            .flat_map(|&lat| {
                [
                    (lat, date(2013, 6, 21), 23.44),
                    (lat, date(2013, 12, 21), -23.44),
                ]
            })
            .collect();
        let mut worst: f64 = 0.0;
        for (lat, day, decl) in cases {
            let site = SiteConfig::new(lat, 0.0, 0.0, "probe").map_err(|e| e.to_string())?;
            let midnight = day.and_hms_opt(0, 0, 0).unwrap().and_utc().timestamp();
            let eot = sun_position(&site, midnight + 12 * 3600).eot_minutes;
            let noon = midnight + ((720.0 - eot) * 60.0).round() as i64;
            let elevation = sun_position(&site, noon).elevation_deg;
            let oracle = 90.0 - (lat - decl).abs();
            worst = worst.max((elevation - oracle).abs());
        }
        if worst >= 0.5 {
            return Err(format!("worst noon-elevation error {worst:.3} degrees"));
        }
        Ok(format!("worst noon-elevation error {worst:.3} degrees over 20 cases"))
    });
}
