mod common;

use afpm_core::magnetics::{
    back_emf_waveform, calibrate_emf, flux_linkage_constant, saturation_check, solve_magnetic_circuit, BackEmfModel,
};
use common::{rel, spec};

#[test]
fn air_gap_density_matches_series_circuit_by_hand() {
    let s = spec();
    let m = &s.materials;
    let lm_eff = m.magnet_axial_length / m.magnet_relative_permeability;
    let b = s.magnetics.leakage_coefficient * m.magnet_remanence * lm_eff / (lm_eff + 2.0 * s.geometry.air_gap_axial);
    let c = solve_magnetic_circuit(&s).unwrap();
    assert!(rel(c.airgap_flux_density, b) < 1e-12, "{} vs {b}", c.airgap_flux_density);
    assert!(rel(c.flux_per_pole, b * s.geometry.pole_area()) < 1e-12);
    assert!(rel(c.core_flux_density_teeth, c.flux_per_pole / c.tooth_area) < 1e-12);
}

#[test]
fn ke_uses_72_effective_turns() {
    let s = spec();
    assert_eq!(s.winding.effective_series_turns(), 72.0);
    let c = solve_magnetic_circuit(&s).unwrap();
    let emf = flux_linkage_constant(&s, &c).unwrap();
    let by_hand = s.magnetics.emf_calibration * 72.0 * 5.0 * c.flux_per_pole;
    assert!(rel(emf.ke_phase, by_hand) < 1e-12);
}

#[test]
fn flux_falls_with_air_gap_and_rises_with_remanence() {
    let base = spec();
    let mut prev = f64::INFINITY;
    for gap_um in [100.0, 150.0, 250.0, 400.0, 600.0, 1000.0] {
        let mut s = base.clone();
        s.geometry.air_gap_axial = gap_um * 1e-6;
        let b = solve_magnetic_circuit(&s).unwrap().airgap_flux_density;
        assert!(b < prev, "gap {gap_um} um: {b} !< {prev}");
        prev = b;
    }
    let mut prev = 0.0;
    for br in [0.8, 1.0, 1.2, 1.4] {
        let mut s = base.clone();
        s.materials.magnet_remanence = br;
        let b = solve_magnetic_circuit(&s).unwrap().airgap_flux_density;
        assert!(b > prev);
        prev = b;
    }
}

#[test]
fn low_saturation_flux_is_flagged() {
    let mut s = spec();
    let ok = saturation_check(&solve_magnetic_circuit(&s).unwrap(), &s.materials);
    assert!(ok.is_ok() && ok.margin > 0.0);
    s.materials.core_saturation_flux = 0.5;
    let c = solve_magnetic_circuit(&s).unwrap();
    let v = saturation_check(&c, &s.materials);
    assert!(c.saturated && !v.is_ok() && v.margin < 0.0);
}

#[test]
fn saturation_limit_is_inclusive() {
    let mut s = spec();
    let c = solve_magnetic_circuit(&s).unwrap();
    s.materials.core_saturation_flux = c.max_core_flux_density();
    assert!(saturation_check(&c, &s.materials).is_ok());
}

#[test]
fn sinusoidal_waveform_statistics() {
    let model = BackEmfModel::sinusoidal(0.03, 5);
    let w = back_emf_waveform(&model, 3000.0, 720).unwrap();
    let amp = 0.03 * 3000.0 * std::f64::consts::PI / 30.0;
    assert!(rel(w.peak, amp) < 1e-9);
    assert!(rel(w.rms(), amp / 2f64.sqrt()) < 1e-9);
    assert!(w.mean().abs() < 1e-9 * amp);
    // one electrical period at 250 Hz
    let dt = w.time[1] - w.time[0];
    assert!(rel(dt * 720.0, 1.0 / 250.0) < 1e-12);
}

#[test]
fn zero_speed_gives_zero_emf() {
    let w = back_emf_waveform(&BackEmfModel::sinusoidal(0.03, 5), 0.0, 64).unwrap();
    assert!(w.emf.iter().all(|&e| e == 0.0) && w.peak == 0.0);
}

#[test]
fn bad_waveform_inputs_are_rejected() {
    let m = BackEmfModel::sinusoidal(0.03, 5);
    assert!(back_emf_waveform(&m, -1.0, 64).is_err());
    assert!(back_emf_waveform(&m, 100.0, 4).is_err());
}

#[test]
fn emf_calibration_is_a_fixed_point_on_the_prototype() {
    let s = spec();
    let c = calibrate_emf(&s, 9.97, 3000.0, 720).unwrap();
    assert!(rel(c, s.magnetics.emf_calibration) < 1e-6, "{c} vs {}", s.magnetics.emf_calibration);
}
