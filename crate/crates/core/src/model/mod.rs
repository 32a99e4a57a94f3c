//! Motor parameterization: geometry, PCB winding stack, materials and the
//! calibration knobs that the reduced-order models expose.
//!
//! All lengths are metres, temperatures degrees Celsius, speeds rad/s and
//! torques N·m. Every type is plain data; construct through
//! [`MotorSpec::validate`] (or [`load_spec`]) to get a checked value.

mod derived;
mod spec_file;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use derived::{active_volume, copper_fill_factor, ActiveVolume, VolumeConvention};
pub use spec_file::{load_spec, parse_spec, serialize_spec, FORMAT_VERSION};

/// Text of the bundled `prototype_19mm.spec`: the 19 mm, 48-layer,
/// 10-pole/9-slot prototype with its calibrated parameters.
pub const PROTOTYPE_SPEC_TEXT: &str = include_str!("../../../../data/prototype_19mm.spec");

/// The bundled prototype spec, parsed and validated.
pub fn prototype() -> MotorSpec {
    parse_spec(PROTOTYPE_SPEC_TEXT).expect("bundled prototype spec is valid")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MotorGeometry {
    pub pole_pairs: u32,
    pub outer_diameter: f64,
    pub inner_diameter: f64,
    pub air_gap_axial: f64,
    pub virtual_slots: u32,
    /// Axial length of one stator: PCB winding stack plus core back-iron.
    pub stator_axial_length: f64,
    pub rotor_axial_length: f64,
    pub overall_axial_length: f64,
    pub stator_count: u32,
    /// Fraction of the core face under a pole occupied by tooth iron.
    pub tooth_fraction: f64,
    /// Radial thickness of the housing shell outside `outer_diameter`.
    pub housing_wall: f64,
}

impl MotorGeometry {
    pub fn outer_radius(&self) -> f64 {
        self.outer_diameter / 2.0
    }

    pub fn inner_radius(&self) -> f64 {
        self.inner_diameter / 2.0
    }

    pub fn mean_radius(&self) -> f64 {
        (self.outer_radius() + self.inner_radius()) / 2.0
    }

    /// Radial length of the active conductor band.
    pub fn radial_build(&self) -> f64 {
        self.outer_radius() - self.inner_radius()
    }

    pub fn annulus_area(&self) -> f64 {
        std::f64::consts::PI * (self.outer_radius().powi(2) - self.inner_radius().powi(2))
    }

    /// Magnet face area belonging to one pole.
    pub fn pole_area(&self) -> f64 {
        self.annulus_area() / f64::from(2 * self.pole_pairs)
    }

    /// Axial length of the assembled active stack.
    pub fn stack_length(&self) -> f64 {
        let n = f64::from(self.stator_count);
        n * self.stator_axial_length + self.rotor_axial_length + n * self.air_gap_axial
    }

    pub fn validate(&self) -> Result<()> {
        let lengths = [
            ("outer_diameter", self.outer_diameter),
            ("inner_diameter", self.inner_diameter),
            ("air_gap_axial", self.air_gap_axial),
            ("stator_axial_length", self.stator_axial_length),
            ("rotor_axial_length", self.rotor_axial_length),
            ("overall_axial_length", self.overall_axial_length),
        ];
        for (name, v) in lengths {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invariant(format!("geometry.{name} must be > 0")));
            }
        }
        if self.outer_diameter <= self.inner_diameter {
            return Err(Error::invariant("geometry: outer_diameter > inner_diameter"));
        }
        if self.pole_pairs < 1 {
            return Err(Error::invariant("geometry: pole_pairs >= 1"));
        }
        if self.virtual_slots < 3 {
            return Err(Error::invariant("geometry: virtual_slots >= 3"));
        }
        if !matches!(self.stator_count, 1 | 2) {
            return Err(Error::invariant("geometry: stator_count in {1, 2}"));
        }
        if !(self.tooth_fraction > 0.0 && self.tooth_fraction <= 1.0) {
            return Err(Error::invariant("geometry: tooth_fraction in (0, 1]"));
        }
        if !(self.housing_wall.is_finite() && self.housing_wall >= 0.0) {
            return Err(Error::invariant("geometry: housing_wall >= 0"));
        }
        // 1 nm slack for decimal round-off in hand-written files
        if self.overall_axial_length + 1e-9 < self.stack_length() {
            return Err(Error::invariant(format!(
                "geometry: overall_axial_length {:.4} mm < stator_count*stator + rotor + stator_count*air_gap = {:.4} mm",
                self.overall_axial_length * 1e3,
                self.stack_length() * 1e3
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PcbWindingStack {
    /// Copper layers in one stator's winding stack.
    pub total_layers: u32,
    pub layers_per_module: u32,
    /// Copper plus dielectric thickness of one layer.
    pub layer_pitch: f64,
    pub copper_thickness: f64,
    pub trace_width: f64,
    pub trace_clearance: f64,
    pub modules_in_series: u32,
    pub parallel_branches: u32,
    pub turns_per_layer_per_coil: u32,
    /// Multiplier on the active turn length covering end connections and vias.
    pub end_connection_factor: f64,
}

impl PcbWindingStack {
    pub fn modules(&self) -> u32 {
        self.total_layers / self.layers_per_module
    }

    /// Axial height of the layer stack.
    pub fn stack_height(&self) -> f64 {
        f64::from(self.total_layers) * self.layer_pitch
    }

    /// Series turns per phase seen by the back-EMF model.
    pub fn effective_series_turns(&self) -> f64 {
        f64::from(self.total_layers)
            * f64::from(self.turns_per_layer_per_coil)
            * f64::from(self.modules_in_series)
            / f64::from(self.parallel_branches)
    }

    pub fn validate(&self) -> Result<()> {
        if self.total_layers == 0 || self.layers_per_module == 0 {
            return Err(Error::invariant("winding: total_layers and layers_per_module >= 1"));
        }
        if self.total_layers % self.layers_per_module != 0 {
            return Err(Error::invariant(format!(
                "winding: total_layers {} not divisible by layers_per_module {}",
                self.total_layers, self.layers_per_module
            )));
        }
        if !(self.layer_pitch.is_finite() && self.layer_pitch > 0.0) {
            return Err(Error::invariant("winding: layer_pitch > 0"));
        }
        if !(self.copper_thickness >= 0.0 && self.copper_thickness < self.layer_pitch) {
            return Err(Error::invariant("winding: 0 <= copper_thickness < layer_pitch"));
        }
        if !(self.trace_width.is_finite() && self.trace_width > 0.0) {
            return Err(Error::invariant("winding: trace_width > 0"));
        }
        if !(self.trace_clearance.is_finite() && self.trace_clearance >= 0.0) {
            return Err(Error::invariant("winding: trace_clearance >= 0"));
        }
        if self.parallel_branches < 1 || self.modules_in_series < 1 {
            return Err(Error::invariant("winding: parallel_branches >= 1 and modules_in_series >= 1"));
        }
        if self.turns_per_layer_per_coil < 1 {
            return Err(Error::invariant("winding: turns_per_layer_per_coil >= 1"));
        }
        if !(self.end_connection_factor >= 1.0) {
            return Err(Error::invariant("winding: end_connection_factor >= 1"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThermalProps {
    pub density: f64,
    pub specific_heat: f64,
    pub conductivity: f64,
}

impl ThermalProps {
    fn validate(&self, region: &str) -> Result<()> {
        for (name, v) in [
            ("density", self.density),
            ("specific_heat", self.specific_heat),
            ("conductivity", self.conductivity),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invariant(format!("materials.{region}.{name} > 0")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaterialSet {
    pub copper_resistivity_20c: f64,
    pub copper_temp_coeff: f64,
    pub core_saturation_flux: f64,
    pub magnet_remanence: f64,
    pub magnet_relative_permeability: f64,
    pub magnet_axial_length: f64,
    /// Relative remanence change per kelvin; negative for NdFeB.
    pub magnet_remanence_temp_coeff: f64,
    pub copper: ThermalProps,
    pub dielectric: ThermalProps,
    pub core: ThermalProps,
    pub magnet: ThermalProps,
    pub housing: ThermalProps,
    pub air: ThermalProps,
    pub insulation_temp_rating: f64,
    pub magnet_temp_rating: f64,
}

impl MaterialSet {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("copper_resistivity_20c", self.copper_resistivity_20c),
            ("core_saturation_flux", self.core_saturation_flux),
            ("magnet_remanence", self.magnet_remanence),
            ("magnet_relative_permeability", self.magnet_relative_permeability),
            ("magnet_axial_length", self.magnet_axial_length),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invariant(format!("materials.{name} > 0")));
            }
        }
        if !self.copper_temp_coeff.is_finite() || !self.magnet_remanence_temp_coeff.is_finite() {
            return Err(Error::invariant("materials: temperature coefficients must be finite"));
        }
        self.copper.validate("copper")?;
        self.dielectric.validate("dielectric")?;
        self.core.validate("core")?;
        self.magnet.validate("magnet")?;
        self.housing.validate("housing")?;
        self.air.validate("air")?;
        Ok(())
    }

    /// Copper resistivity at `temperature` (°C), linear about 20 °C.
    pub fn copper_resistivity(&self, temperature: f64) -> f64 {
        self.copper_resistivity_20c * (1.0 + self.copper_temp_coeff * (temperature - 20.0))
    }

    pub fn lowest_temp_rating(&self) -> f64 {
        self.insulation_temp_rating.min(self.magnet_temp_rating)
    }
}

/// Knobs of the lumped magnetic circuit and back-EMF map.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MagneticParams {
    pub leakage_coefficient: f64,
    /// Dimensionless factor applied to the flux-linkage constant.
    pub emf_calibration: f64,
    /// Relative amplitudes of EMF harmonics above the fundamental, keyed by
    /// electrical order.
    pub emf_harmonics: Vec<(u32, f64)>,
}

/// Measured-input electrical parameters, ratings, and loss model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ElectricalParams {
    pub terminal_inductance: f64,
    pub friction_torque: f64,
    pub fixed_loss: f64,
    /// Current above which the torque constant is derated.
    pub saturation_current: f64,
    /// Incremental torque-per-amp multiplier above `saturation_current`.
    pub saturation_torque_factor: f64,
    /// Copper loss at stall is `copper_loss_factor · I² · R_terminal`.
    pub copper_loss_factor: f64,
    pub nominal_speed: f64,
    pub nominal_current: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RippleParams {
    /// Relative amplitude at the cogging order LCM(2p, slots).
    pub slot_harmonic: f64,
    /// Relative amplitude of the 6th electrical harmonic from commutation.
    pub drive_harmonic: f64,
    /// Cogging torque amplitude; a calibration input, not a prediction.
    pub cogging_peak: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThermalBoundary {
    pub ambient: f64,
    pub convection_coefficient: f64,
    pub stall_dissipation: f64,
    /// Design margin below the lower material temperature rating.
    pub design_margin: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MotorSpec {
    pub name: String,
    pub geometry: MotorGeometry,
    pub winding: PcbWindingStack,
    pub materials: MaterialSet,
    pub magnetics: MagneticParams,
    pub electrical: ElectricalParams,
    pub ripple: RippleParams,
    pub thermal: ThermalBoundary,
    /// (min, max) supply voltage.
    pub nominal_voltage_range: (f64, f64),
    /// Published datasheet values keyed by datasheet row id, display units.
    pub reference: BTreeMap<String, f64>,
}

impl MotorSpec {
    pub fn validate(&self) -> Result<()> {
        self.geometry.validate()?;
        self.winding.validate()?;
        self.materials.validate()?;
        if self.winding.stack_height() >= self.geometry.stator_axial_length {
            return Err(Error::invariant(format!(
                "winding stack height {:.3} mm must leave room for core back-iron in stator_axial_length {:.3} mm",
                self.winding.stack_height() * 1e3,
                self.geometry.stator_axial_length * 1e3
            )));
        }
        if self.materials.magnet_axial_length > self.geometry.rotor_axial_length + 1e-12 {
            return Err(Error::invariant("materials.magnet_axial_length <= geometry.rotor_axial_length"));
        }
        let m = &self.magnetics;
        if !(m.leakage_coefficient > 0.0 && m.leakage_coefficient <= 1.0) {
            return Err(Error::invariant("magnetics.leakage_coefficient in (0, 1]"));
        }
        if !(m.emf_calibration.is_finite() && m.emf_calibration > 0.0) {
            return Err(Error::invariant("magnetics.emf_calibration > 0"));
        }
        let mut orders: Vec<u32> = m.emf_harmonics.iter().map(|h| h.0).collect();
        orders.sort_unstable();
        if orders.windows(2).any(|w| w[0] == w[1]) || orders.iter().any(|&o| o < 2) {
            return Err(Error::invariant("magnetics.emf_harmonics: distinct orders >= 2"));
        }
        let e = &self.electrical;
        if !(e.terminal_inductance > 0.0) {
            return Err(Error::invariant("electrical.terminal_inductance > 0"));
        }
        if !(e.friction_torque >= 0.0 && e.fixed_loss >= 0.0) {
            return Err(Error::invariant("electrical: loss parameters >= 0"));
        }
        if !(e.saturation_current > 0.0 && e.saturation_torque_factor > 0.0 && e.saturation_torque_factor <= 1.0) {
            return Err(Error::invariant("electrical: saturation_current > 0, saturation_torque_factor in (0, 1]"));
        }
        if !(e.copper_loss_factor > 0.0) {
            return Err(Error::invariant("electrical.copper_loss_factor > 0"));
        }
        if !(e.nominal_speed >= 0.0 && e.nominal_current >= 0.0) {
            return Err(Error::invariant("electrical: nominal operating point >= 0"));
        }
        let r = &self.ripple;
        if !(r.slot_harmonic >= 0.0 && r.drive_harmonic >= 0.0 && r.cogging_peak >= 0.0) {
            return Err(Error::invariant("ripple: amplitudes >= 0"));
        }
        let t = &self.thermal;
        if !(t.convection_coefficient >= 0.0 && t.stall_dissipation >= 0.0 && t.design_margin >= 0.0) {
            return Err(Error::invariant("thermal: convection, dissipation and margin >= 0"));
        }
        let (vmin, vmax) = self.nominal_voltage_range;
        if !(vmin > 0.0 && vmin <= vmax) {
            return Err(Error::invariant("nominal_voltage_range: 0 < min <= max"));
        }
        Ok(())
    }

    /// Core back-iron thickness left in each stator after the winding stack.
    pub fn yoke_thickness(&self) -> f64 {
        self.geometry.stator_axial_length - self.winding.stack_height()
    }
}
