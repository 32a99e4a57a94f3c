mod common;

use std::f64::consts::PI;

use afpm_core::electromech::{
    calibrate_copper_thickness, cogging_orders, lcm, max_efficiency, performance_curve, ripple_analysis,
    speed_constant_rpm_per_volt, stall_analysis, synthesize_torque, torque_ripple, turn_length, unbalance_metric,
    winding_resistance, LossModel, MotorConstants, REFERENCE_TEMPERATURE,
};
use afpm_core::model::copper_fill_factor;
use common::{constants, line, rel, spec};

#[test]
fn resistance_follows_resistivity_times_length_over_area() {
    let s = spec();
    let w = &s.winding;
    let g = &s.geometry;
    let rm = (g.outer_diameter + g.inner_diameter) / 4.0;
    let band = (g.outer_diameter - g.inner_diameter) / 2.0;
    let turn = w.end_connection_factor * (2.0 * band + 2.0 * 2.0 * PI * rm / f64::from(g.virtual_slots));
    assert!(rel(turn_length(&s), turn) < 1e-12);
    let length = turn * 48.0 * 3.0;
    let phase = 1.72e-8 * length / (w.trace_width * w.copper_thickness * 2.0);
    let r = winding_resistance(&s, 20.0).unwrap();
    assert!(rel(r, 2.0 * phase) < 1e-12, "{r} vs {}", 2.0 * phase);
}

#[test]
fn hot_resistance_follows_linear_law() {
    let s = spec();
    let r20 = winding_resistance(&s, 20.0).unwrap();
    for t in [-20.0, 20.0, 80.0, 143.0, 200.0] {
        let r = winding_resistance(&s, t).unwrap();
        assert!(rel(r, r20 * (1.0 + 0.00393 * (t - 20.0))) < 1e-12);
    }
}

#[test]
fn resistance_falls_as_traces_widen_or_thicken() {
    let base = spec();
    let mut prev = f64::INFINITY;
    for w_um in [250.0, 300.0, 360.0, 420.0] {
        let mut s = base.clone();
        s.winding.trace_width = w_um * 1e-6;
        let r = winding_resistance(&s, 20.0).unwrap();
        assert!(r < prev);
        prev = r;
    }
    let mut s = base.clone();
    s.winding.copper_thickness *= 2.0;
    let ratio = winding_resistance(&base, 20.0).unwrap() / winding_resistance(&s, 20.0).unwrap();
    assert!((ratio - 2.0).abs() < 1e-12);
}

#[test]
fn copper_thickness_calibration_is_exact_in_one_step() {
    let mut s = spec();
    s.winding.copper_thickness = 30e-6;
    let t = calibrate_copper_thickness(&s, 4.70).unwrap();
    s.winding.copper_thickness = t;
    assert!(rel(winding_resistance(&s, 20.0).unwrap(), 4.70) < 1e-12);
}

#[test]
fn zero_copper_is_an_error() {
    let mut s = spec();
    s.winding.copper_thickness = 0.0;
    assert!(winding_resistance(&s, 20.0).is_err());
}

#[test]
fn fill_factor_is_area_ratio() {
    let s = spec();
    let w = &s.winding;
    let by_hand = (w.copper_thickness / w.layer_pitch) * (w.trace_width / (w.trace_width + w.trace_clearance));
    assert!(rel(copper_fill_factor(&s), by_hand) < 1e-12);
    assert!(copper_fill_factor(&s) >= 0.45);

    // 6 layers of 35 um copper spread over the same window height.
    let mut six = s.clone();
    six.winding.layer_pitch = w.stack_height() / 6.0;
    six.winding.total_layers = 6;
    six.winding.layers_per_module = 6;
    six.winding.copper_thickness = 35e-6;
    let f6 = copper_fill_factor(&six);
    assert!(rel(f6, 6.0 * 35e-6 / 2.88e-3 * 0.36 / 0.46) < 1e-9);
    assert!(f6 < 0.35);
}

#[test]
fn constants_are_reciprocal() {
    let c = constants(&spec());
    c.validate().unwrap();
    assert_eq!(c.kt, c.ke);
    assert!(rel(c.speed_constant * c.ke * 2.0 * PI / 60.0, 1.0) < 1e-12);
    assert!(rel(speed_constant_rpm_per_volt(0.032), 298.415_518) < 1e-8);
}

#[test]
fn magnet_coefficient_derates_kt_when_hot() {
    let s = spec();
    let c = constants(&s);
    let hot = c.at_temperature(143.0);
    let a = s.materials.magnet_remanence_temp_coeff;
    assert!(rel(hot.kt, c.kt * (1.0 + a * 123.0)) < 1e-12);
    let back = hot.at_temperature(20.0);
    assert!(rel(back.kt, c.kt) < 1e-12 && rel(back.terminal_resistance, c.terminal_resistance) < 1e-12);
}

#[test]
fn curve_is_linear_with_hand_endpoints() {
    let c = MotorConstants::from_datasheet(0.032, 4.70, 3e-3).unwrap();
    let curve = performance_curve(&c, 48.0, 0.25, LossModel::ZERO, 51).unwrap();
    assert_eq!(curve.effective_voltage, 12.0);
    let first = curve.points[0];
    let last = curve.points.last().unwrap();
    assert!(rel(first.speed, 12.0 / 0.032) < 1e-12);
    assert!(rel(last.current, 12.0 / 4.70) < 1e-12);
    assert!(rel(last.torque, 0.032 * 12.0 / 4.70) < 1e-12);
    let t: Vec<f64> = curve.points.iter().map(|p| p.torque).collect();
    let w: Vec<f64> = curve.points.iter().map(|p| p.speed).collect();
    let i: Vec<f64> = curve.points.iter().map(|p| p.current).collect();
    let (slope, _, worst) = line(&t, &w);
    assert!(worst <= 1e-6 * w[0], "speed residual {worst}");
    assert!(rel(slope, -4.70 / (0.032 * 0.032)) < 1e-9);
    let (slope, _, worst) = line(&t, &i);
    assert!(worst <= 1e-6 * last.current);
    assert!(rel(slope, 1.0 / 0.032) < 1e-9);
}

#[test]
fn curve_power_balance_holds() {
    let s = spec();
    let c = constants(&s);
    let loss = LossModel {
        friction_torque: s.electrical.friction_torque,
        fixed_loss: s.electrical.fixed_loss,
    };
    let curve = performance_curve(&c, 48.0, 0.25, loss, 41).unwrap();
    for p in &curve.points[..40] {
        let im = curve.motor_current(p);
        let copper = im * im * c.terminal_resistance;
        let friction = loss.friction_torque * p.speed;
        let balance = p.input_power - p.output_power - copper - friction - loss.fixed_loss;
        assert!(balance.abs() < 1e-9 * p.input_power, "{balance}");
    }
}

#[test]
fn curve_rejects_bad_inputs() {
    let c = MotorConstants::from_datasheet(0.032, 4.70, 3e-3).unwrap();
    assert!(performance_curve(&c, 48.0, 0.0, LossModel::ZERO, 10).is_err());
    assert!(performance_curve(&c, 48.0, 1.5, LossModel::ZERO, 10).is_err());
    assert!(performance_curve(&c, 48.0, 0.25, LossModel::ZERO, 1).is_err());
    let heavy = LossModel {
        friction_torque: 1.0,
        fixed_loss: 0.0,
    };
    assert!(performance_curve(&c, 48.0, 0.25, heavy, 10).is_err());
}

#[test]
fn max_efficiency_matches_closed_form_for_friction_only() {
    let c = MotorConstants::from_datasheet(0.032, 4.70, 3e-3).unwrap();
    let tf = 3e-3;
    let (eta, _) = max_efficiency(
        &c,
        12.0,
        LossModel {
            friction_torque: tf,
            fixed_loss: 0.0,
        },
    );
    let i0 = tf / 0.032;
    let is = 12.0 / 4.70;
    let expected = (1.0 - (i0 / is).sqrt()).powi(2);
    assert!((eta - expected).abs() < 1e-9, "{eta} vs {expected}");
}

#[test]
fn stall_analysis_by_hand() {
    let c = MotorConstants::from_datasheet(0.032, 4.70, 3e-3).unwrap();
    let s = stall_analysis(&c, 12.0, REFERENCE_TEMPERATURE).unwrap();
    assert!((s.stall_current - 12.0 / 4.70).abs() < 1e-12);
    assert!((s.stall_torque_cold - 0.032 * 12.0 / 4.70).abs() < 1e-12);
    assert_eq!(s.saturation_factor, 1.0);
}

#[test]
fn saturation_derating_applies_above_threshold_only() {
    let s = spec();
    let c = constants(&s);
    let below = stall_analysis(&c, 1.5 * c.terminal_resistance, 20.0).unwrap();
    assert_eq!(below.saturation_factor, 1.0);
    let v = 24.0;
    let st = stall_analysis(&c, v, 20.0).unwrap();
    let i = v / c.terminal_resistance;
    let expected = c.kt * (2.0 + s.electrical.saturation_torque_factor * (i - 2.0));
    assert!(rel(st.stall_torque_derated, expected) < 1e-12);
}

fn brute_lcm(a: u64, b: u64) -> u64 {
    (1..).map(|k| k * a).find(|m| m % b == 0).unwrap()
}

#[test]
fn lcm_matches_brute_force() {
    for a in 1..=40 {
        for b in 1..=40 {
            assert_eq!(lcm(a, b), brute_lcm(a, b), "lcm({a}, {b})");
        }
    }
}

#[test]
fn prototype_cogging_order_is_90() {
    let s = spec();
    let c = cogging_orders(&s.geometry).unwrap();
    assert_eq!(c.fundamental_period_per_rev, brute_lcm(10, 9));
    assert_eq!(c.fundamental_period_per_rev, 90);
    assert!((c.period_deg - 4.0).abs() < 1e-12);
}

#[test]
fn single_harmonic_ripple_is_twice_its_amplitude() {
    let samples = synthesize_torque(0.03, &[(90, 0.02)], 3600);
    let r = torque_ripple(&samples).unwrap();
    assert!(rel(r.mean_torque, 0.03) < 1e-12);
    assert!(rel(r.ripple_fraction, 0.04) < 1e-9);
}

#[test]
fn prototype_ripple_is_below_six_percent_and_scale_free() {
    let s = spec();
    let a = ripple_analysis(&s, 0.0307).unwrap();
    let b = ripple_analysis(&s, 0.0100).unwrap();
    assert!(a.ripple_fraction < 0.06);
    assert!((a.ripple_fraction - b.ripple_fraction).abs() < 1e-12);
    assert_eq!(a.cogging_period_per_rev, 90);
}

#[test]
fn unbalance_by_hand() {
    let u = unbalance_metric([4.70, 4.72, 4.68]).unwrap();
    assert!(rel(u, 0.04 / 4.70 * 100.0) < 1e-12);
    assert!(unbalance_metric([1.0, 0.0, 1.0]).is_err());
}
