#![allow(dead_code)]

use afpm_core::electromech::{build_constants, MotorConstants, REFERENCE_TEMPERATURE};
use afpm_core::magnetics::{flux_linkage_constant, solve_magnetic_circuit};
use afpm_core::model::{prototype, MotorSpec};

pub fn spec() -> MotorSpec {
    prototype()
}

pub fn constants(spec: &MotorSpec) -> MotorConstants {
    let circuit = solve_magnetic_circuit(spec).unwrap();
    let emf = flux_linkage_constant(spec, &circuit).unwrap();
    build_constants(spec, &emf, REFERENCE_TEMPERATURE).unwrap()
}

pub fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

/// Least-squares line through `(x, y)`: slope, intercept, max |residual|.
pub fn line(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let a = sxy / sxx;
    let b = my - a * mx;
    let worst = x.iter().zip(y).map(|(xi, yi)| (yi - a * xi - b).abs()).fold(0.0, f64::max);
    (a, b, worst)
}
