//! Winding electrical parameters and the electromechanical constants derived
//! from them, plus performance curves, stall analysis and ripple/cogging
//! analysis.

mod curve;
mod ripple;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::magnetics::BackEmfModel;
use crate::model::MotorSpec;

pub use curve::{max_efficiency, performance_curve, calibrate_friction, CurvePoint, LossModel, PerformanceCurve};
pub use ripple::{
    cogging_orders, lcm, ripple_analysis, synthesize_torque, torque_ripple, unbalance_metric,
    CoggingOrders, RippleAnalysis, TorqueRipple, TorqueSamples,
};

/// Temperature at which resistivity and magnet remanence are referenced, °C.
pub const REFERENCE_TEMPERATURE: f64 = 20.0;

/// Length of one spiral turn: two radial passes across the conductor band
/// and two end arcs spanning one virtual-slot pitch at the mean radius,
/// scaled by the end-connection allowance.
pub fn turn_length(spec: &MotorSpec) -> f64 {
    let g = &spec.geometry;
    let arc = 2.0 * PI * g.mean_radius() / f64::from(g.virtual_slots);
    spec.winding.end_connection_factor * (2.0 * g.radial_build() + 2.0 * arc)
}

/// Terminal (line-to-line) resistance at `temperature` °C.
///
/// One coil runs `turns_per_layer_per_coil` turns on each of the
/// `total_layers` layers; `modules_in_series` such coils form a branch and
/// `parallel_branches` branches share the phase current. The winding is wye
/// connected, so the terminal resistance is twice the phase resistance.
pub fn winding_resistance(spec: &MotorSpec, temperature: f64) -> Result<f64> {
    let w = &spec.winding;
    let area = w.trace_width * w.copper_thickness;
    if !(area > 0.0) {
        return Err(Error::InvalidInput("trace has zero copper cross-section".into()));
    }
    if !(temperature.is_finite() && temperature > -273.15) {
        return Err(Error::InvalidInput(format!("temperature {temperature} °C is not physical")));
    }
    let coil_length = turn_length(spec) * f64::from(w.turns_per_layer_per_coil) * f64::from(w.total_layers);
    let branch_length = coil_length * f64::from(w.modules_in_series);
    let rho = spec.materials.copper_resistivity(temperature);
    let phase = rho * branch_length / (area * f64::from(w.parallel_branches));
    Ok(2.0 * phase)
}

/// Copper thickness that makes the 20 °C terminal resistance equal `target`.
/// Resistance is inversely proportional to thickness, so one step is exact.
pub fn calibrate_copper_thickness(spec: &MotorSpec, target: f64) -> Result<f64> {
    let r = winding_resistance(spec, REFERENCE_TEMPERATURE)?;
    Ok(spec.winding.copper_thickness * r / target)
}

/// Torque-per-amp derating above a current threshold, standing in for core
/// saturation at high stall currents.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SaturationDerating {
    pub threshold_current: f64,
    pub factor: f64,
}

impl SaturationDerating {
    pub const NONE: SaturationDerating = SaturationDerating {
        threshold_current: f64::INFINITY,
        factor: 1.0,
    };

    /// Torque-producing equivalent current.
    pub fn effective_current(&self, current: f64) -> f64 {
        if current <= self.threshold_current {
            current
        } else {
            self.threshold_current + self.factor * (current - self.threshold_current)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HotFlags {
    pub resistance_at: f64,
    pub kt_at: f64,
}

/// Electromechanical constants at one temperature.
///
/// `kt` (N·m/A) and `ke` (V·s/rad) are numerically equal in this DC-equivalent
/// model; `speed_constant` is in rpm/V.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MotorConstants {
    pub kt: f64,
    pub ke: f64,
    pub speed_constant: f64,
    pub terminal_resistance: f64,
    pub terminal_inductance: f64,
    pub reference_temperature: f64,
    pub hot_flags: HotFlags,
    pub copper_temp_coeff: f64,
    pub magnet_temp_coeff: f64,
    pub saturation: SaturationDerating,
}

pub fn speed_constant_rpm_per_volt(ke: f64) -> f64 {
    60.0 / (2.0 * PI * ke)
}

impl MotorConstants {
    /// Constants taken directly from a datasheet, referenced at 20 °C.
    pub fn from_datasheet(kt: f64, resistance: f64, inductance: f64) -> Result<Self> {
        if !(kt > 0.0 && resistance > 0.0 && inductance > 0.0) {
            return Err(Error::invariant("constants: kt, resistance and inductance must be > 0"));
        }
        Ok(MotorConstants {
            kt,
            ke: kt,
            speed_constant: speed_constant_rpm_per_volt(kt),
            terminal_resistance: resistance,
            terminal_inductance: inductance,
            reference_temperature: REFERENCE_TEMPERATURE,
            hot_flags: HotFlags {
                resistance_at: REFERENCE_TEMPERATURE,
                kt_at: REFERENCE_TEMPERATURE,
            },
            copper_temp_coeff: 0.0,
            magnet_temp_coeff: 0.0,
            saturation: SaturationDerating::NONE,
        })
    }

    pub fn with_temp_coeffs(mut self, copper: f64, magnet: f64) -> Self {
        self.copper_temp_coeff = copper;
        self.magnet_temp_coeff = magnet;
        self
    }

    pub fn with_saturation(mut self, saturation: SaturationDerating) -> Self {
        self.saturation = saturation;
        self
    }

    /// Re-evaluates resistance and kt at `temperature` from the values at
    /// `hot_flags` using the linear copper and remanence coefficients.
    pub fn at_temperature(&self, temperature: f64) -> Self {
        let r20 = self.terminal_resistance
            / (1.0 + self.copper_temp_coeff * (self.hot_flags.resistance_at - REFERENCE_TEMPERATURE));
        let k20 = self.kt / (1.0 + self.magnet_temp_coeff * (self.hot_flags.kt_at - REFERENCE_TEMPERATURE));
        let r = r20 * (1.0 + self.copper_temp_coeff * (temperature - REFERENCE_TEMPERATURE));
        let k = k20 * (1.0 + self.magnet_temp_coeff * (temperature - REFERENCE_TEMPERATURE));
        MotorConstants {
            kt: k,
            ke: k,
            speed_constant: speed_constant_rpm_per_volt(k),
            terminal_resistance: r,
            hot_flags: HotFlags {
                resistance_at: temperature,
                kt_at: temperature,
            },
            ..*self
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.terminal_resistance > 0.0 && self.terminal_inductance > 0.0) {
            return Err(Error::invariant("constants: resistance and inductance > 0"));
        }
        if !(self.kt > 0.0) || ((self.kt - self.ke) / self.kt).abs() > 1e-9 {
            return Err(Error::invariant("constants: kt = ke > 0"));
        }
        let expected = speed_constant_rpm_per_volt(self.ke);
        if ((self.speed_constant - expected) / expected).abs() > 1e-9 {
            return Err(Error::invariant("constants: speed_constant = 60/(2π·ke)"));
        }
        Ok(())
    }
}

/// Constants of `spec` at `temperature` °C. The EMF model is taken to be
/// referenced at 20 °C; kt follows the magnet remanence coefficient.
pub fn build_constants(spec: &MotorSpec, emf: &BackEmfModel, temperature: f64) -> Result<MotorConstants> {
    emf.validate()?;
    let r20 = winding_resistance(spec, REFERENCE_TEMPERATURE)?;
    let e = &spec.electrical;
    let cold = MotorConstants::from_datasheet(emf.ke_phase, r20, e.terminal_inductance)?
        .with_temp_coeffs(spec.materials.copper_temp_coeff, spec.materials.magnet_remanence_temp_coeff)
        .with_saturation(SaturationDerating {
            threshold_current: e.saturation_current,
            factor: e.saturation_torque_factor,
        });
    let c = cold.at_temperature(temperature);
    // resistance from the winding model directly, not by rescaling
    let constants = MotorConstants {
        terminal_resistance: winding_resistance(spec, temperature)?,
        ..c
    };
    constants.validate()?;
    Ok(constants)
}

/// Peak (supply-limited) stall figures.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StallAnalysis {
    pub voltage: f64,
    pub stall_current: f64,
    /// `kt · I` with cold constants, no saturation.
    pub stall_torque_cold: f64,
    /// Re-evaluated with R and kt at `hot_temperature`.
    pub stall_torque_hot: f64,
    pub hot_temperature: f64,
    /// Cold torque with the saturation derating applied.
    pub stall_torque_derated: f64,
    /// `stall_torque_derated / stall_torque_cold`.
    pub saturation_factor: f64,
}

pub fn stall_analysis(constants: &MotorConstants, voltage: f64, hot_temperature: f64) -> Result<StallAnalysis> {
    if !(voltage >= 0.0 && voltage.is_finite()) {
        return Err(Error::InvalidInput(format!("stall voltage must be >= 0, got {voltage}")));
    }
    let cold = constants.at_temperature(constants.reference_temperature);
    let hot = constants.at_temperature(hot_temperature);
    let current = voltage / cold.terminal_resistance;
    let torque_cold = cold.kt * current;
    let torque_hot = hot.kt * voltage / hot.terminal_resistance;
    let derated = cold.kt * cold.saturation.effective_current(current);
    Ok(StallAnalysis {
        voltage,
        stall_current: current,
        stall_torque_cold: torque_cold,
        stall_torque_hot: torque_hot,
        hot_temperature,
        stall_torque_derated: derated,
        saturation_factor: if torque_cold > 0.0 { derated / torque_cold } else { 1.0 },
    })
}
