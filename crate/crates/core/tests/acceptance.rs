//! Acceptance criteria. Runs as a plain binary so every criterion prints a
//! PASS/FAIL line; exits non-zero if any criterion fails.

mod common;

use std::time::{Duration, Instant};

use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use roadside_doppler::dsp::{self, DetectionConfig, Spectrogram};
use roadside_doppler::model::{
    doppler_to_speed, max_unambiguous_speed, speed_to_doppler, SensorGeometry,
};
use roadside_doppler::pipeline::{analyze, evaluate, AnalysisConfig, GroundTruthLog};
use roadside_doppler::synth::{self, expected_detections, render};
use roadside_doppler::wavio::{read_wav, write_wav, Recording};

use common::*;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn within(x: f64, target: f64, tol: f64) -> bool {
    (x - target).abs() <= tol
}

fn field_geometry() -> SensorGeometry<f64> {
    SensorGeometry::with_angles(20.0, 20.0).unwrap()
}

fn a1() -> Outcome {
    let v = doppler_to_speed(2261.1, &field_geometry());
    outcome(within(v, 57.3, 0.1), format!("2261.1 Hz -> {v:.3} km/h (57.3 ± 0.1)"))
}

fn a2() -> Outcome {
    let peak = 37.4 * 44.68;
    let raw = doppler_to_speed(peak, &SensorGeometry::boresight());
    let corrected = doppler_to_speed(peak, &field_geometry());
    outcome(
        within(raw, 37.4, 0.1) && within(corrected, 42.3, 0.1),
        format!("{peak:.1} Hz -> {raw:.3} km/h uncorrected, {corrected:.3} km/h corrected (37.4 / 42.3 ± 0.1)"),
    )
}

fn a3() -> Outcome {
    let start = Instant::now();
    let analysis = analyze(&render(&single_pass(40.0, 3)), &AnalysisConfig::default()).unwrap();
    let elapsed = start.elapsed();
    let speeds: Vec<f64> = analysis.detections.iter().map(|d| d.estimated_speed).collect();
    let pass = speeds.len() == 1
        && (39.0..=41.0).contains(&speeds[0])
        && elapsed < Duration::from_secs(5);
    outcome(
        pass,
        format!("40 km/h pass -> {} event(s), speeds {speeds:.2?} km/h (need one in [39.0, 41.0]), {elapsed:.2?}", speeds.len()),
    )
}

fn a4() -> Outcome {
    let start = Instant::now();
    let scenario = two_lane_traffic(2024);
    let analysis = analyze(&render(&scenario), &AnalysisConfig::default()).unwrap();
    let elapsed = start.elapsed();
    let truth = GroundTruthLog::from_expected(&expected_detections(&scenario));
    let report = evaluate(&analysis.records(), &truth, 2.0);
    let pass = report.close_lane_total == 28
        && report.far_lane_total == 24
        && report.close_lane_identified >= 27
        && report.far_lane_filtered == 24
        && report.false_alarms == 0
        && elapsed < Duration::from_secs(60);
    outcome(
        pass,
        format!(
            "close {}/{} identified, far {}/{} filtered, {} false alarms, {elapsed:.2?}",
            report.close_lane_identified,
            report.close_lane_total,
            report.far_lane_filtered,
            report.far_lane_total,
            report.false_alarms
        ),
    )
}

fn a5() -> Outcome {
    let v = max_unambiguous_speed(&SensorGeometry::<f64>::boresight());
    outcome(within(v, 537.2, 0.1), format!("Nyquist speed {v:.3} km/h (537.2 ± 0.1)"))
}

fn a6() -> Outcome {
    let count = |speed| {
        analyze(&render(&single_pass(speed, 5)), &AnalysisConfig::default())
            .unwrap()
            .detections
            .len()
    };
    let (slow, normal) = (count(14.0), count(25.0));
    outcome(
        slow == 0 && normal == 1,
        format!("14 km/h -> {slow} detections (need 0), 25 km/h -> {normal} (need 1)"),
    )
}

fn run_suite<S: Strategy>(
    cases: u32,
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> (Result<(), String>, Duration) {
    let start = Instant::now();
    let mut runner = TestRunner::new(Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    });
    let result = runner.run(&strategy, test).map_err(|e| e.to_string());
    (result, start.elapsed())
}

fn geometry_strategy() -> impl Strategy<Value = SensorGeometry<f64>> {
    (0.0f64..89.0, 0.0f64..89.0, 1.0f64..200.0, 1u32..200_000)
        .prop_map(|(az, el, k, fs)| SensorGeometry::new(az, el, k, fs).unwrap())
}

fn a7() -> Outcome {
    let mut lines = Vec::new();
    let mut pass = true;
    let mut record = |name: &str, (result, elapsed): (Result<(), String>, Duration)| {
        let ok = result.is_ok() && elapsed < Duration::from_secs(30);
        pass &= ok;
        lines.push(format!(
            "{name}: {} in {elapsed:.2?}",
            match result {
                Ok(()) => "ok".to_string(),
                Err(e) => e,
            }
        ));
    };

    record(
        "model round trip",
        run_suite(10_000, (0.0f64..537.0, geometry_strategy()), |(s, g)| {
            let back = doppler_to_speed(speed_to_doppler(s, &g), &g);
            prop_assert!((back - s).abs() <= 1e-9 * s.max(1e-300));
            Ok(())
        }),
    );
    record(
        "model monotonicity",
        run_suite(
            10_000,
            (0.0f64..537.0, 1e-6f64..100.0, geometry_strategy()),
            |(s, ds, g)| {
                prop_assert!(speed_to_doppler(s + ds, &g) > speed_to_doppler(s, &g));
                Ok(())
            },
        ),
    );
    record(
        "wav round trip",
        run_suite(
            1_000,
            (proptest::collection::vec(any::<i16>(), 0..5000), 1u32..200_000),
            |(samples, rate)| {
                let rec = Recording::new(samples, rate);
                prop_assert_eq!(read_wav(&write_wav(&rec)).unwrap(), rec);
                Ok(())
            },
        ),
    );
    let spectrogram = (2usize..20, 4usize..64).prop_flat_map(|(frames, bins)| {
        proptest::collection::vec(-120.0f64..0.0, frames * bins).prop_map(move |power_db| {
            Spectrogram {
                power_db,
                frame_times: (0..frames).map(|f| 0.0427 + 0.0747 * f as f64).collect(),
                bin_freqs: (0..bins).map(|k| 375.0 * k as f64).collect(),
                sample_rate: 48000,
                hop: 3584,
            }
        })
    });
    record(
        "masking idempotence",
        run_suite(
            2_000,
            (spectrogram.clone(), -120.0f64..-20.0, 1.0f64..40.0),
            |(s, floor, thr)| {
                let cfg = DetectionConfig {
                    power_threshold_db: thr,
                    ..Default::default()
                };
                let once = dsp::apply_thresholds(&s, &cfg, floor);
                prop_assert_eq!(&dsp::apply_thresholds(&once.spectrogram, &cfg, floor), &once);
                Ok(())
            },
        ),
    );
    record(
        "threshold monotonicity",
        run_suite(
            2_000,
            (spectrogram, -120.0f64..-20.0, 1.0f64..40.0, 0.0f64..40.0),
            |(s, floor, lo, extra)| {
                let low = DetectionConfig {
                    power_threshold_db: lo,
                    ..Default::default()
                };
                let high = DetectionConfig {
                    power_threshold_db: lo + extra,
                    ..low
                };
                let ml = dsp::apply_thresholds(&s, &low, floor);
                let mh = dsp::apply_thresholds(&s, &high, floor);
                prop_assert!(mh.retained_count() <= ml.retained_count());
                let (el, eh) = (dsp::segment_events(&ml, &low), dsp::segment_events(&mh, &high));
                for e in &eh {
                    prop_assert!(el.iter().any(|l| l.t_start <= e.t_start && e.t_end <= l.t_end));
                }
                Ok(())
            },
        ),
    );
    record(
        "synth determinism",
        run_suite(
            20,
            (30.0f64..90.0, 1.0f64..6.0, any::<u64>()),
            |(speed, offset, seed)| {
                let mut s = single_pass(speed, seed);
                s.vehicles[0].lateral_offset_m = offset;
                s.duration_s = 10.0;
                let a = synth::render(&s);
                prop_assert!(a == synth::render(&s));
                Ok(())
            },
        ),
    );
    outcome(pass, lines.join("; "))
}

fn main() {
    let criteria: [(&str, &str, fn() -> Outcome); 7] = [
        ("A1", "Doppler to speed at the reported peak", a1),
        ("A2", "angle-correction pair", a2),
        ("A3", "controlled single pass", a3),
        ("A4", "two-lane count tally", a4),
        ("A5", "Nyquist speed bound", a5),
        ("A6", "low-frequency cutoff", a6),
        ("A7", "property suites", a7),
    ];
    let mut failed = 0;
    for (id, name, run) in criteria {
        let o = run();
        if !o.pass {
            failed += 1;
        }
        println!(
            "{id} {:<4} {name}: {}",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
