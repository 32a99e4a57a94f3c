use serde::{Deserialize, Serialize};

use super::measurements::MeasurementSet;
use crate::electromech::{speed_constant_rpm_per_volt, MotorConstants, REFERENCE_TEMPERATURE, HotFlags, SaturationDerating};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ResistanceSource {
    /// Ohm's law over zero-speed rows.
    LockedRotor,
    /// Least squares of `V = R·I + ke·ω` over all rows.
    JointFit,
    /// `V − ke·ω = R·I` with ke from the EMF waveform.
    EmfCorrected,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KeSource {
    EmfWaveform,
    SpeedVoltage,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitDiagnostics {
    pub record_count: usize,
    /// RMS residual of the torque-current line, N·m.
    pub torque_residual_rms: f64,
    /// RMS residual of the voltage equation, V.
    pub voltage_residual_rms: f64,
    /// Torque intercept of the torque-current line (minus friction), N·m.
    pub torque_intercept: f64,
    pub resistance_source: ResistanceSource,
    pub ke_source: KeSource,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FittedConstants {
    pub kt: f64,
    pub ke: f64,
    pub terminal_resistance: f64,
    /// Mean terminal-pair inductance when the phase section has one.
    pub terminal_inductance: Option<f64>,
    pub diagnostics: FitDiagnostics,
}

impl FittedConstants {
    /// As [`MotorConstants`]; `kt` is used for both kt and ke. The fitted ke
    /// stays available on `self`.
    pub fn to_constants(&self, default_inductance: f64) -> Result<MotorConstants> {
        let l = self.terminal_inductance.unwrap_or(default_inductance);
        let c = MotorConstants {
            kt: self.kt,
            ke: self.kt,
            speed_constant: speed_constant_rpm_per_volt(self.kt),
            terminal_resistance: self.terminal_resistance,
            terminal_inductance: l,
            reference_temperature: REFERENCE_TEMPERATURE,
            hot_flags: HotFlags {
                resistance_at: REFERENCE_TEMPERATURE,
                kt_at: REFERENCE_TEMPERATURE,
            },
            copper_temp_coeff: 0.0,
            magnet_temp_coeff: 0.0,
            saturation: SaturationDerating::NONE,
        };
        c.validate()?;
        Ok(c)
    }
}

/// Slope, intercept and RMS residual of the least-squares line `y = a·x + b`.
pub(crate) fn line_fit(x: &[f64], y: &[f64]) -> Option<(f64, f64, f64)> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    if !(sxx > 1e-18 * scale * scale * n) {
        return None;
    }
    let a = sxy / sxx;
    let b = my - a * mx;
    let rms = (x.iter().zip(y).map(|(xi, yi)| (yi - a * xi - b).powi(2)).sum::<f64>() / n).sqrt();
    Some((a, b, rms))
}

/// Least squares through the origin, `y = a·x`.
fn origin_fit(x: &[f64], y: &[f64]) -> Option<f64> {
    let sxx: f64 = x.iter().map(|v| v * v).sum();
    (sxx > 0.0).then(|| x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>() / sxx)
}

/// Two-parameter least squares `z = a·x + b·y` via the normal equations.
fn plane_fit(x: &[f64], y: &[f64], z: &[f64]) -> Option<(f64, f64)> {
    let (mut sxx, mut sxy, mut syy, mut sxz, mut syz) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for k in 0..x.len() {
        sxx += x[k] * x[k];
        sxy += x[k] * y[k];
        syy += y[k] * y[k];
        sxz += x[k] * z[k];
        syz += y[k] * z[k];
    }
    let det = sxx * syy - sxy * sxy;
    if !(det.abs() > 1e-12 * sxx * syy) {
        return None;
    }
    Some(((sxz * syy - syz * sxy) / det, (syz * sxx - sxz * sxy) / det))
}

/// Fits kt, ke and terminal resistance to dynamometer records.
///
/// kt is the slope of torque against current. Resistance comes from
/// locked-rotor (zero-speed) rows when present. ke comes from the EMF
/// waveform peak over speed when present, otherwise from the voltage
/// equation `V = I·R + ke·ω`.
pub fn fit_constants(data: &MeasurementSet) -> Result<FittedConstants> {
    let recs = &data.records;
    if recs.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "need at least 2 dyno records, got {}",
            recs.len()
        )));
    }
    let current: Vec<f64> = recs.iter().map(|r| r.current).collect();
    let torque: Vec<f64> = recs.iter().map(|r| r.torque).collect();
    let voltage: Vec<f64> = recs.iter().map(|r| r.voltage).collect();
    let speed: Vec<f64> = recs.iter().map(|r| r.speed).collect();

    let (kt, intercept, torque_rms) = line_fit(&current, &torque).ok_or_else(|| {
        Error::InsufficientData("rank-deficient data: all records at one current".into())
    })?;
    if !(kt > 0.0) {
        return Err(Error::InsufficientData(format!("fitted torque constant {kt:e} is not positive")));
    }

    let locked: Vec<usize> = (0..recs.len())
        .filter(|&k| recs[k].speed == 0.0 && recs[k].current > 0.0)
        .collect();
    let emf_ke = data
        .emf_waveform
        .as_ref()
        .filter(|w| w.speed > 0.0 && !w.emf.is_empty())
        .map(|w| w.peak() / w.speed);

    let (r, ke, r_src, ke_src) = if !locked.is_empty() {
        let i: Vec<f64> = locked.iter().map(|&k| current[k]).collect();
        let v: Vec<f64> = locked.iter().map(|&k| voltage[k]).collect();
        let r = origin_fit(&i, &v).expect("locked rows carry current");
        match emf_ke {
            Some(ke) => (r, ke, ResistanceSource::LockedRotor, KeSource::EmfWaveform),
            None => {
                let back: Vec<f64> = (0..recs.len()).map(|k| voltage[k] - current[k] * r).collect();
                let ke = origin_fit(&speed, &back).ok_or_else(|| {
                    Error::InsufficientData("no rotating records to determine ke".into())
                })?;
                (r, ke, ResistanceSource::LockedRotor, KeSource::SpeedVoltage)
            }
        }
    } else if let Some(ke) = emf_ke {
        let drop: Vec<f64> = (0..recs.len()).map(|k| voltage[k] - ke * speed[k]).collect();
        let r = origin_fit(&current, &drop)
            .ok_or_else(|| Error::InsufficientData("no current to determine resistance".into()))?;
        (r, ke, ResistanceSource::EmfCorrected, KeSource::EmfWaveform)
    } else {
        let (r, ke) = plane_fit(&current, &speed, &voltage).ok_or_else(|| {
            Error::InsufficientData("rank-deficient data: current and speed are collinear".into())
        })?;
        (r, ke, ResistanceSource::JointFit, KeSource::SpeedVoltage)
    };
    if !(r > 0.0 && ke > 0.0) {
        return Err(Error::InsufficientData(format!(
            "fit gave non-physical R = {r:e} ohm, ke = {ke:e} V*s/rad"
        )));
    }
    let voltage_rms = ((0..recs.len())
        .map(|k| (voltage[k] - current[k] * r - ke * speed[k]).powi(2))
        .sum::<f64>()
        / recs.len() as f64)
        .sqrt();

    let terminal_inductance = data
        .per_phase
        .as_ref()
        .and_then(|p| p.inductances)
        .map(|l| l.iter().sum::<f64>() / 3.0);

    Ok(FittedConstants {
        kt,
        ke,
        terminal_resistance: r,
        terminal_inductance,
        diagnostics: FitDiagnostics {
            record_count: recs.len(),
            torque_residual_rms: torque_rms,
            voltage_residual_rms: voltage_rms,
            torque_intercept: intercept,
            resistance_source: r_src,
            ke_source: ke_src,
        },
    })
}
