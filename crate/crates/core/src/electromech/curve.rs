use serde::{Deserialize, Serialize};

use super::MotorConstants;
use crate::error::{Error, Result};

/// Non-copper losses: a constant friction torque and a speed-independent
/// power drawn from the supply (drive and magnetizing losses lumped).
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LossModel {
    pub friction_torque: f64,
    pub fixed_loss: f64,
}

impl LossModel {
    pub const ZERO: LossModel = LossModel {
        friction_torque: 0.0,
        fixed_loss: 0.0,
    };

    fn validate(&self) -> Result<()> {
        if !(self.friction_torque >= 0.0 && self.fixed_loss >= 0.0) {
            return Err(Error::InvalidInput("loss parameters must be >= 0".into()));
        }
        Ok(())
    }
}

/// One operating point. SI units: N·m, rad/s, A, W.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub torque: f64,
    pub speed: f64,
    /// Supply current, including the fixed-loss component.
    pub current: f64,
    pub input_power: f64,
    pub output_power: f64,
    pub efficiency: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerformanceCurve {
    pub effective_voltage: f64,
    pub points: Vec<CurvePoint>,
    pub loss_model: LossModel,
    pub constants: MotorConstants,
}

impl PerformanceCurve {
    /// Torque-producing (winding) current of a point.
    pub fn motor_current(&self, point: &CurvePoint) -> f64 {
        point.current - self.loss_model.fixed_loss / self.effective_voltage
    }
}

fn operating_point(c: &MotorConstants, voltage: f64, loss: &LossModel, torque: f64) -> CurvePoint {
    let motor_current = (torque + loss.friction_torque) / c.kt;
    let speed = ((voltage - motor_current * c.terminal_resistance) / c.ke).max(0.0);
    let current = motor_current + loss.fixed_loss / voltage;
    let input_power = voltage * current;
    let output_power = torque * speed;
    CurvePoint {
        torque,
        speed,
        current,
        input_power,
        output_power,
        efficiency: if input_power > 0.0 { output_power / input_power } else { 0.0 },
    }
}

/// Shaft torque at zero speed for an effective voltage.
fn stall_torque(c: &MotorConstants, voltage: f64, loss: &LossModel) -> f64 {
    c.kt * voltage / c.terminal_resistance - loss.friction_torque
}

/// Samples the linear DC-motor characteristic from no load to stall at
/// `supply_voltage · duty`.
pub fn performance_curve(
    constants: &MotorConstants,
    supply_voltage: f64,
    duty: f64,
    loss: LossModel,
    n_points: usize,
) -> Result<PerformanceCurve> {
    if !(duty > 0.0 && duty <= 1.0) {
        return Err(Error::InvalidInput(format!("duty must be in (0, 1], got {duty}")));
    }
    if n_points < 2 {
        return Err(Error::InvalidInput(format!("need at least 2 curve points, got {n_points}")));
    }
    if !(supply_voltage > 0.0) {
        return Err(Error::InvalidInput(format!("supply voltage must be > 0, got {supply_voltage}")));
    }
    loss.validate()?;
    let voltage = supply_voltage * duty;
    let stall = stall_torque(constants, voltage, &loss);
    if !(stall > 0.0) {
        return Err(Error::InvalidInput("friction torque exceeds stall torque".into()));
    }
    let last = n_points - 1;
    let points = (0..n_points)
        .map(|i| {
            let torque = stall * i as f64 / last as f64;
            let mut p = operating_point(constants, voltage, &loss, torque);
            if i == last {
                p.speed = 0.0;
                p.output_power = 0.0;
                p.efficiency = 0.0;
            }
            p
        })
        .collect();
    Ok(PerformanceCurve {
        effective_voltage: voltage,
        points,
        loss_model: loss,
        constants: *constants,
    })
}

/// Maximum efficiency and the shaft torque where it occurs, found by
/// golden-section search on the (unimodal) efficiency-vs-torque curve.
pub fn max_efficiency(constants: &MotorConstants, voltage: f64, loss: LossModel) -> (f64, f64) {
    let eta = |t: f64| operating_point(constants, voltage, &loss, t).efficiency;
    let (mut a, mut b) = (0.0, stall_torque(constants, voltage, &loss).max(0.0));
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    for _ in 0..200 {
        if eta(c) > eta(d) {
            b = d;
        } else {
            a = c;
        }
        c = b - phi * (b - a);
        d = a + phi * (b - a);
    }
    let t = 0.5 * (a + b);
    (eta(t), t)
}

/// Friction torque giving `target` maximum efficiency at `voltage`, with the
/// fixed loss held at `fixed_loss`. Bisection on the monotone map.
pub fn calibrate_friction(constants: &MotorConstants, voltage: f64, fixed_loss: f64, target: f64) -> Result<f64> {
    let eff = |tf: f64| {
        max_efficiency(
            constants,
            voltage,
            LossModel {
                friction_torque: tf,
                fixed_loss,
            },
        )
        .0
    };
    let mut lo = 0.0;
    let mut hi = 0.5 * constants.kt * voltage / constants.terminal_resistance;
    if eff(lo) < target || eff(hi) > target {
        return Err(Error::InvalidInput(format!("target efficiency {target} not bracketed")));
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if eff(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table_constants() -> MotorConstants {
        MotorConstants::from_datasheet(0.032, 4.70, 3e-3).unwrap()
    }

    #[test]
    fn no_load_point_with_zero_losses() {
        let c = table_constants();
        let curve = performance_curve(&c, 48.0, 0.25, LossModel::ZERO, 11).unwrap();
        assert_eq!(curve.effective_voltage, 12.0);
        let p0 = curve.points[0];
        assert_eq!(p0.torque, 0.0);
        assert_eq!(p0.current, 0.0);
        assert_eq!(p0.efficiency, 0.0);
        let no_load_rpm = crate::units::rad_s_to_rpm(p0.speed);
        assert!((no_load_rpm - 12.0 * c.speed_constant).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_arguments() {
        let c = table_constants();
        assert!(performance_curve(&c, 48.0, 0.0, LossModel::ZERO, 10).is_err());
        assert!(performance_curve(&c, 48.0, 1.5, LossModel::ZERO, 10).is_err());
        assert!(performance_curve(&c, 48.0, 0.25, LossModel::ZERO, 1).is_err());
        let neg = LossModel {
            friction_torque: -1e-3,
            fixed_loss: 0.0,
        };
        assert!(performance_curve(&c, 48.0, 0.25, neg, 10).is_err());
    }

    #[test]
    fn torque_increases_and_speed_falls() {
        let c = table_constants();
        let loss = LossModel {
            friction_torque: 2e-3,
            fixed_loss: 0.2,
        };
        let curve = performance_curve(&c, 12.0, 1.0, loss, 50).unwrap();
        for w in curve.points.windows(2) {
            assert!(w[1].torque > w[0].torque);
            assert!(w[1].speed <= w[0].speed);
        }
        for p in &curve.points {
            assert!((0.0..=1.0).contains(&p.efficiency));
            assert!(p.input_power >= p.output_power);
        }
    }

    #[test]
    fn friction_calibration_hits_target() {
        let c = table_constants();
        let tf = calibrate_friction(&c, 12.0, 0.1, 0.60).unwrap();
        let (eta, _) = max_efficiency(
            &c,
            12.0,
            LossModel {
                friction_torque: tf,
                fixed_loss: 0.1,
            },
        );
        assert!((eta - 0.60).abs() < 1e-9);
    }
}
