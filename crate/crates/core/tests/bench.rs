mod common;

use std::f64::consts::PI;
use std::fmt::Write;

use afpm_core::bench::{
    atomic_write, build_datasheet, compare, compare_datasheets, density_ratio, fit_constants, ingest_measurements,
    parse_measurements, Datasheet, DatasheetOptions, KeSource, MeasurementSet, ModelOutputs, ReferenceBasis,
    ResistanceSource, Tolerances, Verdict,
};
use afpm_core::thermal::Resolution;
use afpm_core::Error;
use common::{rel, spec};
use rand::rngs::StdRng;
use rand::{RngExt, SeedableRng};
use rand_distr::Normal;

const FIXTURE: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/prototype_dyno.csv");

/// Dyno text for a motor with the given constants at 12 V plus locked-rotor
/// rows, each reading multiplied by `1 + noise()`.
fn dyno_text(kt: f64, r: f64, friction: f64, mut noise: impl FnMut() -> f64) -> String {
    let mut s = String::from("# format: afpm-measurements/1\n# section: dyno\nvoltage_V,current_A,speed_rpm,torque_mNm\n");
    for k in 0..21 {
        let t = k as f64 * 3e-3;
        let i = (t + friction) / kt;
        let w = (12.0 - i * r) / kt;
        let rpm = w * 30.0 / PI;
        writeln!(s, "{:e},{:e},{:e},{:e}", 12.0 * (1.0 + noise()), i * (1.0 + noise()), rpm * (1.0 + noise()), t * 1e3 * (1.0 + noise())).unwrap();
    }
    for k in 1..=6 {
        let v = 0.5 * k as f64;
        let i = v / r;
        writeln!(s, "{:e},{:e},0,{:e}", v * (1.0 + noise()), i * (1.0 + noise()), (kt * i - friction) * 1e3 * (1.0 + noise())).unwrap();
    }
    s
}

#[test]
fn fixture_ingests_every_section() {
    let m = ingest_measurements(FIXTURE, false).unwrap();
    assert_eq!(m.records.len(), 12);
    assert_eq!(m.records[11].speed, 0.0);
    let p = m.per_phase.as_ref().unwrap();
    assert_eq!(p.labels, ["AB".to_string(), "BC".into(), "CA".into()]);
    assert!((p.inductances.unwrap()[0] - 3e-3).abs() < 1e-15);
    let w = m.emf_waveform.as_ref().unwrap();
    assert!(rel(w.speed, 100.0 * PI) < 1e-12);
    assert!(rel(w.peak(), 9.48) < 1e-12);
    let t = m.thermal.unwrap();
    assert_eq!((t.dissipation, t.peak_temperature, t.ambient), (8.0, 148.0, Some(25.0)));
    assert!(m.skipped.is_empty());
}

#[test]
fn fixture_fit_recovers_published_constants() {
    let m = ingest_measurements(FIXTURE, false).unwrap();
    let f = fit_constants(&m).unwrap();
    assert!(rel(f.kt, 0.032) < 1e-5, "{}", f.kt);
    assert!(rel(f.terminal_resistance, 4.70) < 1e-5);
    assert_eq!(f.diagnostics.resistance_source, ResistanceSource::LockedRotor);
    assert_eq!(f.diagnostics.ke_source, KeSource::EmfWaveform);
    assert!(rel(f.ke, 9.48 / (100.0 * PI)) < 1e-12);
    assert!(rel(f.terminal_inductance.unwrap(), 3e-3) < 1e-12);
}

#[test]
fn noiseless_fit_is_exact() {
    let (kt, r, tf) = (0.0287, 5.3, 2.1e-3);
    let m = parse_measurements(&dyno_text(kt, r, tf, || 0.0), false).unwrap();
    let f = fit_constants(&m).unwrap();
    assert!(rel(f.kt, kt) < 1e-9);
    assert!(rel(f.terminal_resistance, r) < 1e-9);
    assert!(rel(f.ke, kt) < 1e-9);
    assert!((f.diagnostics.torque_intercept + tf).abs() < 1e-9);
    assert!(f.diagnostics.voltage_residual_rms < 1e-9);
    let c = f.to_constants(1e-3).unwrap();
    assert!(rel(c.speed_constant, 60.0 / (2.0 * PI * kt)) < 1e-9);
}

#[test]
fn joint_fit_without_locked_rotor_rows() {
    let (kt, r, tf) = (0.0287, 5.3, 2.1e-3);
    let text = dyno_text(kt, r, tf, || 0.0);
    let rotating: String = text.lines().filter(|l| !l.contains(",0,")).map(|l| format!("{l}\n")).collect();
    let f = fit_constants(&parse_measurements(&rotating, false).unwrap()).unwrap();
    assert_eq!(f.diagnostics.resistance_source, ResistanceSource::JointFit);
    assert!(rel(f.terminal_resistance, r) < 1e-8);
    assert!(rel(f.ke, kt) < 1e-8);
}

#[test]
fn noisy_fit_stays_within_one_percent() {
    let (kt, r, tf) = (0.032, 4.70, 3.9e-3);
    let normal = Normal::new(0.0, 0.01).unwrap();
    let mut rng = StdRng::seed_from_u64(0x5eed);
    let trials = 200;
    let (mut ekt, mut er, mut eke) = (0.0, 0.0, 0.0);
    for _ in 0..trials {
        let m = parse_measurements(&dyno_text(kt, r, tf, || rng.sample(normal)), false).unwrap();
        let f = fit_constants(&m).unwrap();
        ekt += rel(f.kt, kt).powi(2);
        er += rel(f.terminal_resistance, r).powi(2);
        eke += rel(f.ke, kt).powi(2);
    }
    let rms = |s: f64| (s / trials as f64).sqrt();
    assert!(rms(ekt) < 0.01, "kt rms error {}", rms(ekt));
    assert!(rms(er) < 0.01, "R rms error {}", rms(er));
    assert!(rms(eke) < 0.01, "ke rms error {}", rms(eke));
}

#[test]
fn degenerate_inputs_report_insufficient_data() {
    assert!(matches!(parse_measurements("", false), Err(Error::InsufficientData(_))));
    let one = "# format: afpm-measurements/1\n# section: dyno\nvoltage_V,current_A,speed_rpm,torque_mNm\n12,0.5,3000,10\n";
    let m = parse_measurements(one, false).unwrap();
    assert!(matches!(fit_constants(&m), Err(Error::InsufficientData(_))));
    let same = format!("{one}12,0.5,2900,10.1\n");
    let m = parse_measurements(&same, false).unwrap();
    assert!(matches!(fit_constants(&m), Err(Error::InsufficientData(_))));
}

#[test]
fn malformed_files_name_the_line() {
    let no_format = "# section: dyno\nvoltage_V,current_A,speed_rpm,torque_mNm\n";
    assert!(matches!(parse_measurements(no_format, false), Err(Error::Parse { .. })));
    let no_unit = "# format: afpm-measurements/1\n# section: dyno\nvoltage,current_A,speed_rpm,torque_mNm\n";
    match parse_measurements(no_unit, false) {
        Err(Error::Parse { line, message, .. }) => {
            assert_eq!(line, Some(3));
            assert!(message.contains("unit"), "{message}");
        }
        other => panic!("{other:?}"),
    }
    let missing = "# format: afpm-measurements/1\n# section: dyno\nvoltage_V,current_A,speed_rpm\n";
    assert!(matches!(parse_measurements(missing, false), Err(Error::Parse { line: Some(3), .. })));
}

#[test]
fn lenient_mode_skips_bad_rows() {
    let text = "# format: afpm-measurements/1\n# section: dyno\nvoltage_V,current_A,speed_rpm,torque_mNm\n12,0.5,3000,10\n12,oops,2900,11\n12,1.0,2500,25\n";
    match parse_measurements(text, false) {
        Err(Error::Parse { line, .. }) => assert_eq!(line, Some(5)),
        other => panic!("{other:?}"),
    }
    let m = parse_measurements(text, true).unwrap();
    assert_eq!(m.records.len(), 2);
    assert_eq!(m.skipped.len(), 1);
    assert_eq!(m.skipped[0].line, 5);
}

#[test]
fn units_convert_to_si() {
    let text = "# format: afpm-measurements/1\n# section: dyno\nvoltage_mV,current_mA,speed_rad_s,torque_Nm,timestamp_ms\n12000,500,100,0.01,1500\n";
    let r = parse_measurements(text, false).unwrap().records[0];
    assert!((r.voltage - 12.0).abs() < 1e-12 && (r.current - 0.5).abs() < 1e-12);
    assert_eq!((r.speed, r.torque), (100.0, 0.01));
    assert!((r.timestamp.unwrap() - 1.5).abs() < 1e-12);
}

fn model() -> ModelOutputs {
    ModelOutputs::from_spec_at(&spec(), Resolution::new(128, 128)).unwrap()
}

#[test]
fn fixture_comparison_reports_emf_and_thermal_deviation() {
    let m = ingest_measurements(FIXTURE, false).unwrap();
    let report = compare(&model(), &m, &Tolerances::default()).unwrap();
    let emf = report.row("emf_peak").unwrap();
    assert_eq!(emf.basis, ReferenceBasis::Model);
    assert!((emf.relative_error - 0.049).abs() < 5e-4, "{}", emf.relative_error);
    assert_eq!(emf.verdict, Verdict::Pass);
    let th = report.row("stall_temperature_rise").unwrap();
    assert!((th.relative_error - 5.0 / 123.0).abs() < 1e-3, "{}", th.relative_error);
    assert_eq!(th.verdict, Verdict::Pass);
    assert_eq!(report.row("stall_peak_temperature").unwrap().verdict, Verdict::Info);
    assert!(report.pass);

    let tight = compare(&model(), &m, &Tolerances::uniform(0.02)).unwrap();
    assert!(!tight.pass);
}

#[test]
fn empty_measurements_have_no_overlap() {
    assert!(matches!(compare(&model(), &MeasurementSet::default(), &Tolerances::default()), Err(Error::NoOverlap)));
}

#[test]
fn datasheet_round_trip_is_exact() {
    let opts = DatasheetOptions {
        resolution: Resolution::new(32, 32),
        ..DatasheetOptions::default()
    };
    let d = build_datasheet(&spec(), &opts).unwrap();
    let json = d.to_json();
    let back = Datasheet::from_json(&json).unwrap();
    assert_eq!(back, d);
    assert_eq!(back.to_json(), json);
    let report = compare_datasheets(&d, &back, 0.0).unwrap();
    assert!(report.pass);
    assert!(report.rows.iter().all(|r| r.relative_error == 0.0));
    assert_eq!(report.rows.len(), d.rows.len());
}

#[test]
fn datasheet_rejects_foreign_format() {
    assert!(matches!(Datasheet::from_json(r#"{"format":"other","motor":"x","rows":[]}"#), Err(Error::Parse { .. })));
    assert!(Datasheet::from_json("not json").is_err());
}

#[test]
fn cogging_row_is_marked_as_input() {
    let opts = DatasheetOptions {
        resolution: Resolution::new(24, 24),
        ..DatasheetOptions::default()
    };
    let d = build_datasheet(&spec(), &opts).unwrap();
    let row = d.get("cogging_torque").unwrap();
    assert!(row.note.as_deref().unwrap().contains("not a prediction"));
    assert_eq!(d.get("cogging_periods_per_rev").unwrap().value, 90.0);
}

#[test]
fn density_ratio_by_hand_and_unit_flag() {
    let r = density_ratio((158.0, 4.0), (126.0, 4.0 / 0.75), 1.617, 0.05, Some(5.32)).unwrap();
    let by_hand = (158.0 / 4.0) / (126.0 / (4.0 / 0.75));
    assert!(rel(r.ratio, by_hand) < 1e-12);
    assert!(r.pass);
    let u = r.unit_inconsistent.unwrap();
    assert!(rel(u.computed_in_published_unit, 158.0 / 4.0 * 1e-3) < 1e-12);
    assert!(u.factor > 100.0);
    let consistent = density_ratio((158.0, 4.0), (126.0, 4.0), 1.254, 0.05, Some(0.0395)).unwrap();
    assert!(consistent.unit_inconsistent.is_none());
    assert!(density_ratio((0.0, 4.0), (126.0, 4.0), 1.0, 0.05, None).is_err());
}

#[test]
fn atomic_write_leaves_only_the_target() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.csv");
    atomic_write(&path, b"a,b\n").unwrap();
    atomic_write(&path, b"c,d\n").unwrap();
    assert_eq!(std::fs::read(&path).unwrap(), b"c,d\n");
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    assert!(atomic_write(dir.path().join("missing/out.csv"), b"x").is_err());
}
