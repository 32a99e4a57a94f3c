use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{MotorGeometry, MotorSpec};

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

pub fn lcm(a: u64, b: u64) -> u64 {
    a / gcd(a, b) * b
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoggingOrders {
    /// Cogging periods per mechanical revolution: LCM(pole count, slots).
    pub fundamental_period_per_rev: u64,
    /// Mechanical degrees per cogging period.
    pub period_deg: f64,
}

pub fn cogging_orders(geometry: &MotorGeometry) -> Result<CoggingOrders> {
    if geometry.pole_pairs < 1 || geometry.virtual_slots < 1 {
        return Err(Error::InvalidInput("pole_pairs and virtual_slots must be >= 1".into()));
    }
    let n = lcm(2 * u64::from(geometry.pole_pairs), u64::from(geometry.virtual_slots));
    Ok(CoggingOrders {
        fundamental_period_per_rev: n,
        period_deg: 360.0 / n as f64,
    })
}

/// Torque sampled over mechanical angle (rad, N·m).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TorqueSamples {
    pub angle: Vec<f64>,
    pub torque: Vec<f64>,
}

/// `T(θ) = mean · (1 + Σ aₖ sin(k θ))` over one revolution, `k` in
/// mechanical orders.
pub fn synthesize_torque(mean: f64, harmonics: &[(u64, f64)], samples_per_rev: usize) -> TorqueSamples {
    let angle: Vec<f64> = (0..samples_per_rev)
        .map(|i| 2.0 * PI * i as f64 / samples_per_rev as f64)
        .collect();
    let torque = angle
        .iter()
        .map(|&th| {
            let shape: f64 = harmonics
                .iter()
                .map(|&(k, a)| a * (k as f64 * th).sin())
                .sum();
            mean * (1.0 + shape)
        })
        .collect();
    TorqueSamples { angle, torque }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TorqueRipple {
    pub mean_torque: f64,
    /// Peak-to-peak over mean, as a fraction.
    pub ripple_fraction: f64,
}

/// `(max − min) / mean` over the samples, which must cover at least one
/// full ripple period.
pub fn torque_ripple(samples: &TorqueSamples) -> Result<TorqueRipple> {
    if samples.torque.is_empty() {
        return Err(Error::InvalidInput("empty torque waveform".into()));
    }
    let n = samples.torque.len() as f64;
    let mean = samples.torque.iter().sum::<f64>() / n;
    if !(mean > 0.0) {
        return Err(Error::InvalidInput(format!("mean torque must be > 0, got {mean}")));
    }
    let (lo, hi) = samples
        .torque
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &t| (lo.min(t), hi.max(t)));
    Ok(TorqueRipple {
        mean_torque: mean,
        ripple_fraction: (hi - lo) / mean,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RippleAnalysis {
    pub mean_torque: f64,
    pub ripple_fraction: f64,
    pub cogging_period_per_rev: u64,
    /// Calibration input carried from the spec, not predicted.
    pub cogging_peak: f64,
}

/// Samples per revolution used for synthesized ripple waveforms.
pub const RIPPLE_SAMPLES_PER_REV: usize = 3600;

/// Ripple of the spec's harmonic model at `mean_torque`: a slot harmonic at
/// the cogging order and a 6th electrical harmonic from commutation.
pub fn ripple_analysis(spec: &MotorSpec, mean_torque: f64) -> Result<RippleAnalysis> {
    let cogging = cogging_orders(&spec.geometry)?;
    let drive_order = 6 * u64::from(spec.geometry.pole_pairs);
    let harmonics = [
        (cogging.fundamental_period_per_rev, spec.ripple.slot_harmonic),
        (drive_order, spec.ripple.drive_harmonic),
    ];
    let samples = synthesize_torque(mean_torque, &harmonics, RIPPLE_SAMPLES_PER_REV);
    let ripple = torque_ripple(&samples)?;
    Ok(RippleAnalysis {
        mean_torque: ripple.mean_torque,
        ripple_fraction: ripple.ripple_fraction,
        cogging_period_per_rev: cogging.fundamental_period_per_rev,
        cogging_peak: spec.ripple.cogging_peak,
    })
}

/// Three-phase unbalance, `(max − min) / mean × 100` percent.
pub fn unbalance_metric(values: [f64; 3]) -> Result<f64> {
    if values.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::InvalidInput(format!("per-phase values must be > 0, got {values:?}")));
    }
    let max = values.iter().copied().fold(f64::MIN, f64::max);
    let min = values.iter().copied().fold(f64::MAX, f64::min);
    let mean = values.iter().sum::<f64>() / 3.0;
    Ok((max - min) / mean * 100.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn geometry(pole_pairs: u32, slots: u32) -> MotorGeometry {
        MotorGeometry {
            pole_pairs,
            virtual_slots: slots,
            ..crate::model::prototype().geometry
        }
    }

    #[test]
    fn two_poles_two_slots() {
        let c = cogging_orders(&geometry(1, 2)).unwrap();
        assert_eq!(c.fundamental_period_per_rev, 2);
        assert_eq!(c.period_deg, 180.0);
    }

    #[test]
    fn constant_waveform_has_no_ripple() {
        let s = synthesize_torque(0.0307, &[], 360);
        let r = torque_ripple(&s).unwrap();
        assert_eq!(r.ripple_fraction, 0.0);
    }

    #[test]
    fn nonpositive_mean_is_rejected() {
        let s = TorqueSamples {
            angle: vec![0.0, 1.0],
            torque: vec![-1.0, 0.5],
        };
        assert!(torque_ripple(&s).is_err());
    }

    #[test]
    fn unbalance_examples() {
        assert_eq!(unbalance_metric([4.70, 4.70, 4.70]).unwrap(), 0.0);
        assert!((unbalance_metric([1.0, 1.0, 2.0]).unwrap() - 75.0).abs() < 1e-12);
        assert!(unbalance_metric([1.0, 0.0, 2.0]).is_err());
        assert!(unbalance_metric([1.0, -1.0, 2.0]).is_err());
    }
}
