use std::path::PathBuf;
use std::process::{Command, Output};

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

fn afpm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_afpm")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn error_json(o: &Output) -> serde_json::Value {
    let text = String::from_utf8(o.stderr.clone()).unwrap();
    serde_json::from_str(text.lines().last().unwrap()).unwrap()
}

fn spec() -> String {
    data("prototype_19mm.spec").display().to_string()
}

#[test]
fn no_arguments_is_a_usage_error() {
    let o = afpm(&[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
}

#[test]
fn analyze_shows_model_and_reference_kt() {
    let o = afpm(&["analyze", &spec(), "--resolution", "32x32"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.contains("kt = 32.0 mNm/A (reference)"), "{text}");
    assert!(text.contains("kt = 31.7"), "{text}");
    assert!(text.contains("Cogging torque"));
}

#[test]
fn spec_flag_and_positional_are_equivalent() {
    let a = afpm(&["curves", &spec(), "--points", "5"]);
    let b = afpm(&["curves", "--spec", &spec(), "--points", "5"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn thermal_at_eight_watts_peaks_near_143() {
    let o = afpm(&["thermal", &spec(), "--power", "8", "--format", "json"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let peak = v["peak_temperature_c"].as_f64().unwrap();
    assert!((peak - 143.0).abs() < 1.0, "{peak}");
}

#[test]
fn thermal_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = afpm(&["thermal", &spec(), "--resolution", "16x16", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let csv = std::fs::read_to_string(out.join("thermal_field.csv")).unwrap();
    assert!(csv.starts_with("r_mm,z_mm,temp_C\n"));
    assert_eq!(csv.lines().count(), 1 + 16 * 16);
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("thermal_summary.json")).unwrap()).unwrap();
    assert_eq!(summary["resolution"], serde_json::json!([16, 16]));
}

#[test]
fn outputs_are_deterministic() {
    let args = ["sweep", &spec(), "--axis", "winding.trace_width=0.30mm:0.42mm:4", "--axis", "geometry.air_gap_axial=0.15 mm:0.25 mm:3"];
    let a = afpm(&args);
    let b = afpm(&args);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(stdout(&a).lines().count(), 13);
    let d1 = afpm(&["datasheet", &spec(), "--resolution", "24x24"]);
    let d2 = afpm(&["datasheet", &spec(), "--resolution", "24x24"]);
    assert_eq!(d1.stdout, d2.stdout);
}

#[test]
fn sweep_writes_top_candidates() {
    let dir = tempfile::tempdir().unwrap();
    let o = afpm(&["sweep", &spec(), "--axis", "winding.trace_width=0.30mm:0.42mm:3", "--top", "2", "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success());
    for f in ["sweep.csv", "sweep.json", "candidate_01.spec", "candidate_02.spec"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    assert!(!dir.path().join("candidate_03.spec").exists());
    let top = afpm(&["curves", dir.path().join("candidate_01.spec").to_str().unwrap(), "--points", "3"]);
    assert!(top.status.success());
}

#[test]
fn compare_passes_on_the_bench_fixture() {
    let o = afpm(&["compare", data("prototype_dyno.csv").to_str().unwrap(), "--spec", &spec()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.contains("emf_peak (V)") && text.contains("4.91"));
    assert!(text.contains("unit-inconsistent"));
}

#[test]
fn compare_failure_exits_5() {
    let o = afpm(&["compare", data("prototype_dyno.csv").to_str().unwrap(), "--spec", &spec(), "--tolerance", "1"]);
    assert_eq!(o.status.code(), Some(5));
    assert_eq!(error_json(&o)["error"], "comparison-failed");
}

#[test]
fn datasheet_compares_cleanly_against_itself() {
    let dir = tempfile::tempdir().unwrap();
    let o = afpm(&["datasheet", &spec(), "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success());
    let ds = dir.path().join("datasheet.json");
    let o = afpm(&["compare", ds.to_str().unwrap(), "--spec", &spec(), "--tolerance", "0", "--format", "json"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["report"]["rows"].as_array().unwrap().iter().all(|r| r["relative_error"] == 0.0));
}

#[test]
fn invalid_inputs_exit_3_with_json() {
    let missing = afpm(&["thermal", "/nonexistent/motor.spec"]);
    assert_eq!(missing.status.code(), Some(3));
    assert_eq!(error_json(&missing)["error"], "io");

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.spec");
    let text = std::fs::read_to_string(spec()).unwrap().replace("\"0.25 mm\"", "\"0.25 parsecs\"");
    std::fs::write(&bad, text).unwrap();
    let o = afpm(&["analyze", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(error_json(&o)["error"], "parse");

    let o = afpm(&["sweep", &spec(), "--axis", "winding.bogus=1:2:3"]);
    assert_eq!(o.status.code(), Some(3));

    let empty = dir.path().join("empty.csv");
    std::fs::write(&empty, "").unwrap();
    let o = afpm(&["compare", empty.to_str().unwrap(), "--spec", &spec()]);
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(error_json(&o)["error"], "insufficient-data");
}

#[test]
fn bad_flag_values_are_usage_errors() {
    assert_eq!(afpm(&["thermal", &spec(), "--resolution", "big"]).status.code(), Some(2));
    assert_eq!(afpm(&["curves", &spec(), "--format", "xml"]).status.code(), Some(2));
}
