//! Axisymmetric finite-volume heat conduction for the motor cross-section:
//! steady and transient solves with a uniform winding source, and the
//! electro-thermal continuous stall search.

mod grid;
mod solver;
mod stall;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::MotorSpec;
use crate::units::fmt_sig9;

pub use grid::{build_grid, BoundarySpec, FaceCondition, Region, RegionProps, Resolution, Side, ThermalGrid};
pub use solver::{
    explicit_stability_limit, steady_state_solve, transient_solve, ThermalField, TimeScheme, TransientFrame,
    RESIDUAL_TOLERANCE,
};
pub use stall::{continuous_stall_torque, ContinuousStall, COUPLING_RELAXATION, COUPLING_TOLERANCE};

/// Resolution used for reported stall-case fields.
pub const DEFAULT_RESOLUTION: Resolution = Resolution::new(128, 128);

/// Boundary from the spec: convection at the spec ambient on the outer
/// cylinder and both end faces, symmetry at the axis.
pub fn spec_boundary(spec: &MotorSpec) -> BoundarySpec {
    BoundarySpec::convective(spec.thermal.convection_coefficient, spec.thermal.ambient)
}

/// Steady stall case: `power` watts in the winding.
pub fn stall_case(spec: &MotorSpec, resolution: Resolution, power: f64) -> Result<(ThermalGrid, ThermalField)> {
    let grid = build_grid(spec, resolution, spec_boundary(spec))?;
    let field = steady_state_solve(&grid, power, Region::Winding)?;
    Ok((grid, field))
}

/// Convection coefficient giving `target_peak` °C for `power` W, by
/// bisection on `log h` (peak falls monotonically with h).
pub fn calibrate_convection(spec: &MotorSpec, resolution: Resolution, power: f64, target_peak: f64) -> Result<f64> {
    let peak = |h: f64| -> Result<f64> {
        let mut s = spec.clone();
        s.thermal.convection_coefficient = h;
        Ok(stall_case(&s, resolution, power)?.1.peak_temperature)
    };
    let (mut lo, mut hi) = (1.0f64.ln(), 1e5f64.ln());
    if peak(lo.exp())? < target_peak || peak(hi.exp())? > target_peak {
        return Err(crate::Error::InvalidInput(format!(
            "peak {target_peak} °C at {power} W is not reachable with h in [1, 1e5]"
        )));
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if peak(mid.exp())? > target_peak {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((0.5 * (lo + hi)).exp())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThermalSummary {
    pub source_power_w: f64,
    pub ambient_c: f64,
    pub peak_temperature_c: f64,
    pub peak_location_mm: (f64, f64),
    pub insulation_rating_c: f64,
    pub insulation_margin_k: f64,
    pub magnet_rating_c: f64,
    pub magnet_margin_k: f64,
    pub energy_imbalance: f64,
    pub residual_norm: f64,
    pub iterations: usize,
    pub resolution: (usize, usize),
}

pub fn summarize(spec: &MotorSpec, grid: &ThermalGrid, field: &ThermalField) -> ThermalSummary {
    let m = &spec.materials;
    ThermalSummary {
        source_power_w: field.total_source_power,
        ambient_c: spec.thermal.ambient,
        peak_temperature_c: field.peak_temperature,
        peak_location_mm: (field.peak_location.0 * 1e3, field.peak_location.1 * 1e3),
        insulation_rating_c: m.insulation_temp_rating,
        insulation_margin_k: m.insulation_temp_rating - field.peak_temperature,
        magnet_rating_c: m.magnet_temp_rating,
        magnet_margin_k: m.magnet_temp_rating - field.peak_temperature,
        energy_imbalance: field.energy_imbalance(),
        residual_norm: field.residual_norm,
        iterations: field.iterations,
        resolution: (grid.nr(), grid.nz()),
    }
}

/// Cell-centre field as `r_mm,z_mm,temp_C` rows.
pub fn field_csv(grid: &ThermalGrid, field: &ThermalField) -> String {
    let mut out = String::from("r_mm,z_mm,temp_C\n");
    for j in 0..grid.nz() {
        for i in 0..grid.nr() {
            out.push_str(&format!(
                "{},{},{}\n",
                fmt_sig9(grid.r_center(i) * 1e3),
                fmt_sig9(grid.z_center(j) * 1e3),
                fmt_sig9(field.temperature[grid.index(i, j)])
            ));
        }
    }
    out
}
