use serde::{Deserialize, Serialize};

use super::grid::{Region, ThermalGrid};
use super::solver::Assembly;
use crate::electromech::MotorConstants;
use crate::error::{Error, Result};
use crate::model::MotorSpec;

/// Under-relaxation of the resistance-temperature fixed point.
pub const COUPLING_RELAXATION: f64 = 0.5;
/// Fixed-point stopping tolerance on peak temperature, K.
pub const COUPLING_TOLERANCE: f64 = 0.1;
const COUPLING_MAX_ITER: usize = 500;
/// Peak temperatures above this are treated as thermal runaway.
const RUNAWAY_TEMPERATURE: f64 = 2000.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContinuousStall {
    /// N·m.
    pub torque: f64,
    pub current: f64,
    pub dissipation: f64,
    pub peak_temperature: f64,
    /// Terminal resistance at the peak temperature.
    pub resistance: f64,
    /// kt at the peak temperature.
    pub kt: f64,
}

/// Peak temperature as an affine function of winding dissipation: the
/// zero-power field plus `P` times the 1 W response, maximized over cells.
struct PeakModel {
    base: Vec<f64>,
    unit: Vec<f64>,
}

impl PeakModel {
    fn new(grid: &ThermalGrid) -> Result<Self> {
        let asm = Assembly::new(grid)?;
        let base = asm.steady(grid, &vec![0.0; grid.cells()])?.temperature;
        let source = asm.source(grid, 1.0, Region::Winding)?;
        let one = asm.steady(grid, &source)?.temperature;
        let unit = one.iter().zip(&base).map(|(a, b)| a - b).collect();
        Ok(PeakModel { base, unit })
    }

    fn peak(&self, power: f64) -> f64 {
        self.base
            .iter()
            .zip(&self.unit)
            .map(|(b, u)| b + power * u)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Relaxed fixed point of `T = peak(k·I²·R(T))`. `None` on runaway.
fn coupled_peak(model: &PeakModel, constants: &MotorConstants, loss_factor: f64, current: f64, start: f64) -> Option<(f64, f64)> {
    let mut t = start;
    for _ in 0..COUPLING_MAX_ITER {
        let p = loss_factor * current * current * constants.at_temperature(t).terminal_resistance;
        let target = model.peak(p);
        let next = t + COUPLING_RELAXATION * (target - t);
        if !next.is_finite() || next > RUNAWAY_TEMPERATURE {
            return None;
        }
        if (next - t).abs() < COUPLING_TOLERANCE {
            let p = loss_factor * current * current * constants.at_temperature(next).terminal_resistance;
            return Some((next, p));
        }
        t = next;
    }
    None
}

/// Largest stall current whose coupled steady peak temperature stays at or
/// below `temp_limit`, found by bisection on current.
///
/// Winding dissipation is `copper_loss_factor · I² · R(T_peak)` with `R` the
/// terminal resistance; torque is `kt(T_peak) · I`.
pub fn continuous_stall_torque(
    spec: &MotorSpec,
    constants: &MotorConstants,
    grid: &ThermalGrid,
    temp_limit: f64,
) -> Result<ContinuousStall> {
    let model = PeakModel::new(grid)?;
    let ambient_peak = model.peak(0.0);
    if temp_limit < ambient_peak {
        return Err(Error::InvalidInput(format!(
            "temperature limit {temp_limit} °C is below ambient {ambient_peak} °C"
        )));
    }
    let loss_factor = spec.electrical.copper_loss_factor;
    let at = |current: f64, peak: f64, dissipation: f64| {
        let hot = constants.at_temperature(peak);
        ContinuousStall {
            torque: hot.kt * current,
            current,
            dissipation,
            peak_temperature: peak,
            resistance: hot.terminal_resistance,
            kt: hot.kt,
        }
    };
    if temp_limit == ambient_peak {
        return Ok(at(0.0, ambient_peak, 0.0));
    }
    let within = |i: f64| match coupled_peak(&model, constants, loss_factor, i, ambient_peak) {
        Some((t, _)) => t <= temp_limit,
        None => false,
    };

    let mut lo = 0.0;
    let mut hi = 0.1;
    while within(hi) {
        lo = hi;
        hi *= 2.0;
        if hi > 1e4 {
            return Err(Error::CouplingNonConvergence { low: lo, high: hi });
        }
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if within(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (peak, p) = coupled_peak(&model, constants, loss_factor, lo, ambient_peak)
        .ok_or(Error::CouplingNonConvergence { low: lo, high: hi })?;
    Ok(at(lo, peak, p))
}
