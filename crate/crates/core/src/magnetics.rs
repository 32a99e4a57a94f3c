//! Lumped magnetic circuit of the dual-stator, internal-rotor topology.
//!
//! The rotor carries axially magnetized magnets with no back-iron. Each
//! magnet drives flux across the air gap into one stator core, tangentially
//! through that core's yoke to the neighbouring pole, back across the gap and
//! through the neighbouring magnet into the opposite stator. Per magnet the
//! series path is one magnet length plus two air gaps; the cores are treated
//! as ideal iron. Fringing is not corrected for: the gap reluctance uses the
//! geometric pole area, and the EMF calibration factor absorbs the difference.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{MaterialSet, MotorSpec};
use crate::units::rpm_to_rad_s;

pub const MU0: f64 = 4.0e-7 * PI;

/// One series element of the reluctance network.
#[derive(Clone, Debug, PartialEq)]
pub struct ReluctanceElement {
    pub name: &'static str,
    pub length: f64,
    pub area: f64,
    pub relative_permeability: f64,
}

impl ReluctanceElement {
    pub fn reluctance(&self) -> f64 {
        self.length / (MU0 * self.relative_permeability * self.area)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MagneticCircuitResult {
    pub airgap_flux_density: f64,
    pub flux_per_pole: f64,
    pub pole_area: f64,
    pub core_flux_density_teeth: f64,
    pub core_flux_density_yoke: f64,
    pub tooth_area: f64,
    pub yoke_area: f64,
    pub leakage_coefficient: f64,
    pub core_saturation_flux: f64,
    pub saturated: bool,
}

impl MagneticCircuitResult {
    pub fn max_core_flux_density(&self) -> f64 {
        self.core_flux_density_teeth.max(self.core_flux_density_yoke)
    }
}

/// `B = Φ / A`.
pub fn core_flux_density(flux: f64, area: f64) -> f64 {
    flux / area
}

/// The series path driven by a single magnet.
pub fn reluctance_path(spec: &MotorSpec) -> Vec<ReluctanceElement> {
    let area = spec.geometry.pole_area();
    let m = &spec.materials;
    vec![
        ReluctanceElement {
            name: "magnet",
            length: m.magnet_axial_length,
            area,
            relative_permeability: m.magnet_relative_permeability,
        },
        ReluctanceElement {
            name: "air-gap-a",
            length: spec.geometry.air_gap_axial,
            area,
            relative_permeability: 1.0,
        },
        ReluctanceElement {
            name: "air-gap-b",
            length: spec.geometry.air_gap_axial,
            area,
            relative_permeability: 1.0,
        },
    ]
}

pub fn solve_magnetic_circuit(spec: &MotorSpec) -> Result<MagneticCircuitResult> {
    let m = &spec.materials;
    let g = &spec.geometry;
    if !(m.magnet_axial_length > 0.0) {
        return Err(Error::InvalidInput("magnet axial length must be > 0".into()));
    }
    let pole_area = g.pole_area();
    let tooth_area = g.tooth_fraction * pole_area;
    let yoke_area = spec.yoke_thickness() * g.radial_build();
    if !(pole_area > 0.0 && tooth_area > 0.0 && yoke_area > 0.0) {
        return Err(Error::InvalidInput(format!(
            "degenerate magnetic areas (pole {pole_area:e}, tooth {tooth_area:e}, yoke {yoke_area:e} m^2)"
        )));
    }

    // Magnet as a Thevenin source: MMF Br·l/(µ0·µr) behind its own reluctance.
    let mmf = m.magnet_remanence * m.magnet_axial_length / (MU0 * m.magnet_relative_permeability);
    let total: f64 = reluctance_path(spec).iter().map(ReluctanceElement::reluctance).sum();
    let flux = spec.magnetics.leakage_coefficient * mmf / total;

    let airgap_flux_density = flux / pole_area;
    // Flux splits both ways around the yoke to the neighbouring poles.
    let teeth = core_flux_density(flux, tooth_area);
    let yoke = core_flux_density(flux / 2.0, yoke_area);
    let saturated = teeth.max(yoke) > m.core_saturation_flux;

    Ok(MagneticCircuitResult {
        airgap_flux_density,
        flux_per_pole: airgap_flux_density * pole_area,
        pole_area,
        core_flux_density_teeth: teeth,
        core_flux_density_yoke: yoke,
        tooth_area,
        yoke_area,
        leakage_coefficient: spec.magnetics.leakage_coefficient,
        core_saturation_flux: m.core_saturation_flux,
        saturated,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SaturationState {
    Ok,
    Saturated,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SaturationVerdict {
    pub state: SaturationState,
    /// `B_sat − max(core densities)`, tesla.
    pub margin: f64,
}

impl SaturationVerdict {
    pub fn is_ok(&self) -> bool {
        self.state == SaturationState::Ok
    }
}

/// The limit is inclusive: a core exactly at `B_sat` passes.
pub fn saturation_check(result: &MagneticCircuitResult, materials: &MaterialSet) -> SaturationVerdict {
    let margin = materials.core_saturation_flux - result.max_core_flux_density();
    SaturationVerdict {
        state: if margin >= 0.0 {
            SaturationState::Ok
        } else {
            SaturationState::Saturated
        },
        margin,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BackEmfModel {
    /// Peak phase EMF per mechanical rad/s.
    pub ke_phase: f64,
    /// (electrical order, relative amplitude); the fundamental `(1, 1.0)` is first.
    pub harmonic_amplitudes: Vec<(u32, f64)>,
    pub pole_pairs: u32,
}

impl BackEmfModel {
    /// A pure-fundamental model.
    pub fn sinusoidal(ke_phase: f64, pole_pairs: u32) -> Self {
        BackEmfModel {
            ke_phase,
            harmonic_amplitudes: vec![(1, 1.0)],
            pole_pairs,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.ke_phase > 0.0 && self.ke_phase.is_finite()) {
            return Err(Error::invariant("back-EMF: ke_phase > 0"));
        }
        if self.harmonic_amplitudes.first() != Some(&(1, 1.0)) {
            return Err(Error::invariant("back-EMF: fundamental (1, 1.0) must lead the harmonic list"));
        }
        let mut orders: Vec<u32> = self.harmonic_amplitudes.iter().map(|h| h.0).collect();
        orders.sort_unstable();
        if orders.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::invariant("back-EMF: harmonic orders must be distinct"));
        }
        Ok(())
    }
}

/// Builds the back-EMF model from the solved circuit.
///
/// `ke = c · N · p · Φ`, where `N` is the effective series turns per phase,
/// `p` the pole pairs, `Φ` the flux per pole (B_g over the mean-radius annulus
/// sector of one pole), and `c` the spec's `emf_calibration`.
pub fn flux_linkage_constant(spec: &MotorSpec, circuit: &MagneticCircuitResult) -> Result<BackEmfModel> {
    let turns = spec.winding.effective_series_turns();
    if !(turns > 0.0) {
        return Err(Error::InvalidInput("winding has zero effective turns".into()));
    }
    if !(circuit.flux_per_pole > 0.0) {
        return Err(Error::InvalidInput("magnetic circuit carries zero flux".into()));
    }
    let p = spec.geometry.pole_pairs;
    let ke = spec.magnetics.emf_calibration * turns * f64::from(p) * circuit.flux_per_pole;
    let mut harmonics = vec![(1, 1.0)];
    harmonics.extend(spec.magnetics.emf_harmonics.iter().copied());
    let model = BackEmfModel {
        ke_phase: ke,
        harmonic_amplitudes: harmonics,
        pole_pairs: p,
    };
    model.validate()?;
    Ok(model)
}

/// Calibration factor that makes the sampled EMF peak at `speed_rpm` equal
/// `target_peak`, holding every other spec parameter fixed.
pub fn calibrate_emf(spec: &MotorSpec, target_peak: f64, speed_rpm: f64, samples: usize) -> Result<f64> {
    let circuit = solve_magnetic_circuit(spec)?;
    let model = flux_linkage_constant(spec, &circuit)?;
    let peak = back_emf_waveform(&model, speed_rpm, samples)?.peak;
    Ok(spec.magnetics.emf_calibration * target_peak / peak)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Waveform {
    pub time: Vec<f64>,
    pub emf: Vec<f64>,
    /// Largest |emf| over the samples.
    pub peak: f64,
}

impl Waveform {
    pub fn rms(&self) -> f64 {
        (self.emf.iter().map(|e| e * e).sum::<f64>() / self.emf.len() as f64).sqrt()
    }

    pub fn mean(&self) -> f64 {
        self.emf.iter().sum::<f64>() / self.emf.len() as f64
    }
}

/// Samples one electrical period of the phase EMF at `samples` evenly spaced
/// instants `t_i = i·T_e/samples`. At zero speed every sample (and time) is 0.
pub fn back_emf_waveform(model: &BackEmfModel, speed_rpm: f64, samples: usize) -> Result<Waveform> {
    if !(speed_rpm >= 0.0 && speed_rpm.is_finite()) {
        return Err(Error::InvalidInput(format!("speed must be >= 0 rpm, got {speed_rpm}")));
    }
    if samples < 16 {
        return Err(Error::InvalidInput(format!("need at least 16 samples, got {samples}")));
    }
    let omega = rpm_to_rad_s(speed_rpm);
    let omega_e = f64::from(model.pole_pairs) * omega;
    let period = if omega_e > 0.0 { 2.0 * PI / omega_e } else { 0.0 };
    let amplitude = model.ke_phase * omega;

    let mut time = Vec::with_capacity(samples);
    let mut emf = Vec::with_capacity(samples);
    for i in 0..samples {
        let phase = 2.0 * PI * i as f64 / samples as f64;
        time.push(period * i as f64 / samples as f64);
        let shape: f64 = model
            .harmonic_amplitudes
            .iter()
            .map(|&(k, a)| a * (f64::from(k) * phase).sin())
            .sum();
        emf.push(amplitude * shape);
    }
    let peak = emf.iter().fold(0.0_f64, |acc, e| acc.max(e.abs()));
    Ok(Waveform { time, emf, peak })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn halving_core_area_doubles_density() {
        let flux = 2.07e-5;
        let a = 12.25e-6;
        assert_eq!(core_flux_density(flux, a / 2.0), 2.0 * core_flux_density(flux, a));
    }

    #[test]
    fn zero_speed_gives_zero_waveform() {
        let model = BackEmfModel::sinusoidal(0.0317, 5);
        let w = back_emf_waveform(&model, 0.0, 64).unwrap();
        assert!(w.emf.iter().all(|&e| e == 0.0));
        assert_eq!(w.peak, 0.0);
    }

    #[test]
    fn rejects_too_few_samples_and_negative_speed() {
        let model = BackEmfModel::sinusoidal(0.0317, 5);
        assert!(back_emf_waveform(&model, 3000.0, 15).is_err());
        assert!(back_emf_waveform(&model, -1.0, 64).is_err());
    }

    #[test]
    fn pure_sine_rms_over_peak() {
        let model = BackEmfModel::sinusoidal(0.0317, 5);
        let w = back_emf_waveform(&model, 3000.0, 256).unwrap();
        let ratio = w.rms() / w.peak;
        assert!((ratio - 1.0 / 2f64.sqrt()).abs() / (1.0 / 2f64.sqrt()) < 1e-3, "{ratio}");
    }

    #[test]
    fn waveform_spans_one_electrical_period() {
        let model = BackEmfModel::sinusoidal(0.0317, 5);
        let w = back_emf_waveform(&model, 3000.0, 100).unwrap();
        // 3000 rpm, 5 pole pairs -> 250 Hz electrical
        let dt = w.time[1] - w.time[0];
        assert!((dt * 100.0 - 1.0 / 250.0).abs() < 1e-15);
    }

    #[test]
    fn model_validation() {
        let mut m = BackEmfModel::sinusoidal(0.03, 5);
        m.validate().unwrap();
        m.harmonic_amplitudes.push((3, 0.01));
        m.validate().unwrap();
        m.harmonic_amplitudes.push((3, 0.02));
        assert!(m.validate().is_err());
        assert!(BackEmfModel::sinusoidal(0.0, 5).validate().is_err());
    }

    #[test]
    fn saturation_boundary_cases() {
        let materials_like = |b_core: f64| {
            let result = MagneticCircuitResult {
                airgap_flux_density: 0.8,
                flux_per_pole: 1e-5,
                pole_area: 1.25e-5,
                core_flux_density_teeth: b_core,
                core_flux_density_yoke: 0.1,
                tooth_area: 1e-5,
                yoke_area: 1e-5,
                leakage_coefficient: 0.95,
                core_saturation_flux: 2.4,
                saturated: b_core > 2.4,
            };
            let mut m = crate::model::prototype().materials;
            m.core_saturation_flux = 2.4;
            saturation_check(&result, &m)
        };
        let v = materials_like(2.0);
        assert!(v.is_ok());
        assert!((v.margin - 0.4).abs() < 1e-12);
        let v = materials_like(2.4);
        assert!(v.is_ok());
        assert_eq!(v.margin, 0.0);
        let v = materials_like(2.5);
        assert_eq!(v.state, SaturationState::Saturated);
        assert!((v.margin + 0.1).abs() < 1e-12);
    }
}
