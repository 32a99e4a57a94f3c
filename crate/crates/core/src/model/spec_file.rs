//! The declarative motor spec file.
//!
//! A TOML document whose dimensional values are strings carrying an explicit
//! unit suffix (`outer_diameter = "19 mm"`). Dimensionless values and counts
//! are bare numbers. Unknown keys are rejected so that typos surface as
//! errors instead of silently falling back to defaults.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use toml::{Table, Value};

use super::{
    ElectricalParams, MagneticParams, MaterialSet, MotorGeometry, MotorSpec, PcbWindingStack,
    RippleParams, ThermalBoundary, ThermalProps,
};
use crate::error::{Error, Result};
use crate::units::{format_quantity, parse_quantity, Quantity};

pub const FORMAT_VERSION: i64 = 1;

pub fn load_spec(path: impl AsRef<Path>) -> Result<MotorSpec> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_spec(&text)
}

pub fn parse_spec(text: &str) -> Result<MotorSpec> {
    let table: Table = text.parse().map_err(|e: toml::de::Error| {
        let line = e.span().map(|s| text[..s.start].lines().count().max(1));
        Error::parse(line, None, e.message().to_owned())
    })?;
    let mut root = Reader::new(text, String::new(), &table);

    let version = root.integer("format_version")?;
    if version != FORMAT_VERSION {
        return Err(root.error("format_version", format!("unsupported format_version {version}, expected {FORMAT_VERSION}")));
    }
    let name = root.string("name")?;
    let voltage_range = root.quantity_pair("nominal_voltage_range", Quantity::Voltage)?;

    let geometry = {
        let mut r = root.section("geometry")?;
        let g = MotorGeometry {
            pole_pairs: r.count("pole_pairs")?,
            outer_diameter: r.quantity("outer_diameter", Quantity::Length)?,
            inner_diameter: r.quantity("inner_diameter", Quantity::Length)?,
            air_gap_axial: r.quantity("air_gap_axial", Quantity::Length)?,
            virtual_slots: r.count("virtual_slots")?,
            stator_axial_length: r.quantity("stator_axial_length", Quantity::Length)?,
            rotor_axial_length: r.quantity("rotor_axial_length", Quantity::Length)?,
            overall_axial_length: r.quantity("overall_axial_length", Quantity::Length)?,
            stator_count: r.count("stator_count")?,
            tooth_fraction: r.number("tooth_fraction")?,
            housing_wall: r.quantity("housing_wall", Quantity::Length)?,
        };
        r.finish()?;
        g
    };

    let winding = {
        let mut r = root.section("winding")?;
        let w = PcbWindingStack {
            total_layers: r.count("total_layers")?,
            layers_per_module: r.count("layers_per_module")?,
            layer_pitch: r.quantity("layer_pitch", Quantity::Length)?,
            copper_thickness: r.quantity("copper_thickness", Quantity::Length)?,
            trace_width: r.quantity("trace_width", Quantity::Length)?,
            trace_clearance: r.quantity("trace_clearance", Quantity::Length)?,
            modules_in_series: r.count("modules_in_series")?,
            parallel_branches: r.count("parallel_branches")?,
            turns_per_layer_per_coil: r.count("turns_per_layer_per_coil")?,
            end_connection_factor: r.number("end_connection_factor")?,
        };
        r.finish()?;
        w
    };

    let materials = {
        let mut r = root.section("materials")?;
        let props = |r: &mut Reader, key: &str| -> Result<ThermalProps> {
            let mut s = r.section(key)?;
            let p = ThermalProps {
                density: s.quantity("density", Quantity::Density)?,
                specific_heat: s.quantity("specific_heat", Quantity::SpecificHeat)?,
                conductivity: s.quantity("conductivity", Quantity::Conductivity)?,
            };
            s.finish()?;
            Ok(p)
        };
        let m = MaterialSet {
            copper_resistivity_20c: r.quantity("copper_resistivity_20c", Quantity::Resistivity)?,
            copper_temp_coeff: r.quantity("copper_temp_coeff", Quantity::PerKelvin)?,
            core_saturation_flux: r.quantity("core_saturation_flux", Quantity::FluxDensity)?,
            magnet_remanence: r.quantity("magnet_remanence", Quantity::FluxDensity)?,
            magnet_relative_permeability: r.number("magnet_relative_permeability")?,
            magnet_axial_length: r.quantity("magnet_axial_length", Quantity::Length)?,
            magnet_remanence_temp_coeff: r.quantity("magnet_remanence_temp_coeff", Quantity::PerKelvin)?,
            copper: props(&mut r, "copper")?,
            dielectric: props(&mut r, "dielectric")?,
            core: props(&mut r, "core")?,
            magnet: props(&mut r, "magnet")?,
            housing: props(&mut r, "housing")?,
            air: props(&mut r, "air")?,
            insulation_temp_rating: r.quantity("insulation_temp_rating", Quantity::Temperature)?,
            magnet_temp_rating: r.quantity("magnet_temp_rating", Quantity::Temperature)?,
        };
        r.finish()?;
        m
    };

    let magnetics = {
        let mut r = root.section("magnetics")?;
        let m = MagneticParams {
            leakage_coefficient: r.number("leakage_coefficient")?,
            emf_calibration: r.number("emf_calibration")?,
            emf_harmonics: r.harmonics("emf_harmonics")?,
        };
        r.finish()?;
        m
    };

    let electrical = {
        let mut r = root.section("electrical")?;
        let e = ElectricalParams {
            terminal_inductance: r.quantity("terminal_inductance", Quantity::Inductance)?,
            friction_torque: r.quantity("friction_torque", Quantity::Torque)?,
            fixed_loss: r.quantity("fixed_loss", Quantity::Power)?,
            saturation_current: r.quantity("saturation_current", Quantity::Current)?,
            saturation_torque_factor: r.number("saturation_torque_factor")?,
            copper_loss_factor: r.number("copper_loss_factor")?,
            nominal_speed: r.quantity("nominal_speed", Quantity::Speed)?,
            nominal_current: r.quantity("nominal_current", Quantity::Current)?,
        };
        r.finish()?;
        e
    };

    let ripple = {
        let mut r = root.section("ripple")?;
        let p = RippleParams {
            slot_harmonic: r.number("slot_harmonic")?,
            drive_harmonic: r.number("drive_harmonic")?,
            cogging_peak: r.quantity("cogging_peak", Quantity::Torque)?,
        };
        r.finish()?;
        p
    };

    let thermal = {
        let mut r = root.section("thermal")?;
        let t = ThermalBoundary {
            ambient: r.quantity("ambient", Quantity::Temperature)?,
            convection_coefficient: r.quantity("convection_coefficient", Quantity::HeatTransfer)?,
            stall_dissipation: r.quantity("stall_dissipation", Quantity::Power)?,
            design_margin: r.quantity("design_margin", Quantity::TemperatureDelta)?,
        };
        r.finish()?;
        t
    };

    let reference = if root.table.contains_key("reference") {
        let mut r = root.section("reference")?;
        let keys: Vec<String> = r.table.keys().cloned().collect();
        let mut out = BTreeMap::new();
        for k in keys {
            out.insert(k.clone(), r.number(&k)?);
        }
        r.finish()?;
        out
    } else {
        BTreeMap::new()
    };
    root.finish()?;

    let spec = MotorSpec {
        name,
        geometry,
        winding,
        materials,
        magnetics,
        electrical,
        ripple,
        thermal,
        nominal_voltage_range: voltage_range,
        reference,
    };
    spec.validate()?;
    Ok(spec)
}

/// Canonical text form of a spec. Parsing the output yields a spec equal to
/// the input, and re-serializing that spec reproduces the same bytes.
pub fn serialize_spec(spec: &MotorSpec) -> String {
    let q = |v: f64, u: Quantity| Value::String(format_quantity(v, u));
    let n = Value::Float;
    let c = |v: u32| Value::Integer(i64::from(v));

    let mut root = Table::new();
    root.insert("format_version".into(), Value::Integer(FORMAT_VERSION));
    root.insert("name".into(), Value::String(spec.name.clone()));
    root.insert(
        "nominal_voltage_range".into(),
        Value::Array(vec![
            q(spec.nominal_voltage_range.0, Quantity::Voltage),
            q(spec.nominal_voltage_range.1, Quantity::Voltage),
        ]),
    );

    let g = &spec.geometry;
    let mut t = Table::new();
    t.insert("pole_pairs".into(), c(g.pole_pairs));
    t.insert("outer_diameter".into(), q(g.outer_diameter, Quantity::Length));
    t.insert("inner_diameter".into(), q(g.inner_diameter, Quantity::Length));
    t.insert("air_gap_axial".into(), q(g.air_gap_axial, Quantity::Length));
    t.insert("virtual_slots".into(), c(g.virtual_slots));
    t.insert("stator_axial_length".into(), q(g.stator_axial_length, Quantity::Length));
    t.insert("rotor_axial_length".into(), q(g.rotor_axial_length, Quantity::Length));
    t.insert("overall_axial_length".into(), q(g.overall_axial_length, Quantity::Length));
    t.insert("stator_count".into(), c(g.stator_count));
    t.insert("tooth_fraction".into(), n(g.tooth_fraction));
    t.insert("housing_wall".into(), q(g.housing_wall, Quantity::Length));
    root.insert("geometry".into(), Value::Table(t));

    let w = &spec.winding;
    let mut t = Table::new();
    t.insert("total_layers".into(), c(w.total_layers));
    t.insert("layers_per_module".into(), c(w.layers_per_module));
    t.insert("layer_pitch".into(), q(w.layer_pitch, Quantity::Length));
    t.insert("copper_thickness".into(), q(w.copper_thickness, Quantity::Length));
    t.insert("trace_width".into(), q(w.trace_width, Quantity::Length));
    t.insert("trace_clearance".into(), q(w.trace_clearance, Quantity::Length));
    t.insert("modules_in_series".into(), c(w.modules_in_series));
    t.insert("parallel_branches".into(), c(w.parallel_branches));
    t.insert("turns_per_layer_per_coil".into(), c(w.turns_per_layer_per_coil));
    t.insert("end_connection_factor".into(), n(w.end_connection_factor));
    root.insert("winding".into(), Value::Table(t));

    let m = &spec.materials;
    let props = |p: &ThermalProps| {
        let mut t = Table::new();
        t.insert("density".into(), q(p.density, Quantity::Density));
        t.insert("specific_heat".into(), q(p.specific_heat, Quantity::SpecificHeat));
        t.insert("conductivity".into(), q(p.conductivity, Quantity::Conductivity));
        Value::Table(t)
    };
    let mut t = Table::new();
    t.insert("copper_resistivity_20c".into(), q(m.copper_resistivity_20c, Quantity::Resistivity));
    t.insert("copper_temp_coeff".into(), q(m.copper_temp_coeff, Quantity::PerKelvin));
    t.insert("core_saturation_flux".into(), q(m.core_saturation_flux, Quantity::FluxDensity));
    t.insert("magnet_remanence".into(), q(m.magnet_remanence, Quantity::FluxDensity));
    t.insert("magnet_relative_permeability".into(), n(m.magnet_relative_permeability));
    t.insert("magnet_axial_length".into(), q(m.magnet_axial_length, Quantity::Length));
    t.insert(
        "magnet_remanence_temp_coeff".into(),
        q(m.magnet_remanence_temp_coeff, Quantity::PerKelvin),
    );
    t.insert("insulation_temp_rating".into(), q(m.insulation_temp_rating, Quantity::Temperature));
    t.insert("magnet_temp_rating".into(), q(m.magnet_temp_rating, Quantity::Temperature));
    t.insert("copper".into(), props(&m.copper));
    t.insert("dielectric".into(), props(&m.dielectric));
    t.insert("core".into(), props(&m.core));
    t.insert("magnet".into(), props(&m.magnet));
    t.insert("housing".into(), props(&m.housing));
    t.insert("air".into(), props(&m.air));
    root.insert("materials".into(), Value::Table(t));

    let mg = &spec.magnetics;
    let mut t = Table::new();
    t.insert("leakage_coefficient".into(), n(mg.leakage_coefficient));
    t.insert("emf_calibration".into(), n(mg.emf_calibration));
    t.insert(
        "emf_harmonics".into(),
        Value::Array(
            mg.emf_harmonics
                .iter()
                .map(|&(order, amp)| Value::Array(vec![c(order), n(amp)]))
                .collect(),
        ),
    );
    root.insert("magnetics".into(), Value::Table(t));

    let e = &spec.electrical;
    let mut t = Table::new();
    t.insert("terminal_inductance".into(), q(e.terminal_inductance, Quantity::Inductance));
    t.insert("friction_torque".into(), q(e.friction_torque, Quantity::Torque));
    t.insert("fixed_loss".into(), q(e.fixed_loss, Quantity::Power));
    t.insert("saturation_current".into(), q(e.saturation_current, Quantity::Current));
    t.insert("saturation_torque_factor".into(), n(e.saturation_torque_factor));
    t.insert("copper_loss_factor".into(), n(e.copper_loss_factor));
    t.insert("nominal_speed".into(), q(e.nominal_speed, Quantity::Speed));
    t.insert("nominal_current".into(), q(e.nominal_current, Quantity::Current));
    root.insert("electrical".into(), Value::Table(t));

    let r = &spec.ripple;
    let mut t = Table::new();
    t.insert("slot_harmonic".into(), n(r.slot_harmonic));
    t.insert("drive_harmonic".into(), n(r.drive_harmonic));
    t.insert("cogging_peak".into(), q(r.cogging_peak, Quantity::Torque));
    root.insert("ripple".into(), Value::Table(t));

    let th = &spec.thermal;
    let mut t = Table::new();
    t.insert("ambient".into(), q(th.ambient, Quantity::Temperature));
    t.insert("convection_coefficient".into(), q(th.convection_coefficient, Quantity::HeatTransfer));
    t.insert("stall_dissipation".into(), q(th.stall_dissipation, Quantity::Power));
    t.insert("design_margin".into(), q(th.design_margin, Quantity::TemperatureDelta));
    root.insert("thermal".into(), Value::Table(t));

    if !spec.reference.is_empty() {
        let t: Table = spec
            .reference
            .iter()
            .map(|(k, v)| (k.clone(), Value::Float(*v)))
            .collect();
        root.insert("reference".into(), Value::Table(t));
    }

    toml::to_string(&root).expect("spec tables always serialize")
}

/// Walks one TOML table, remembering which keys were consumed.
struct Reader<'a> {
    src: &'a str,
    path: String,
    table: &'a Table,
    used: BTreeSet<String>,
}

impl<'a> Reader<'a> {
    fn new(src: &'a str, path: String, table: &'a Table) -> Self {
        Reader {
            src,
            path,
            table,
            used: BTreeSet::new(),
        }
    }

    fn full(&self, key: &str) -> String {
        if self.path.is_empty() {
            key.to_owned()
        } else {
            format!("{}.{key}", self.path)
        }
    }

    /// Best-effort 1-based line of `key` inside this reader's section.
    fn line_of(&self, key: &str) -> Option<usize> {
        let header = format!("[{}]", self.path);
        let mut in_section = self.path.is_empty();
        for (i, raw) in self.src.lines().enumerate() {
            let line = raw.trim();
            if line.starts_with('[') {
                in_section = line == header;
                continue;
            }
            if in_section {
                let name = line.split('=').next().unwrap_or("").trim();
                if name == key {
                    return Some(i + 1);
                }
            }
        }
        None
    }

    fn error(&self, key: &str, message: impl Into<String>) -> Error {
        Error::parse(self.line_of(key), Some(&self.full(key)), message)
    }

    fn get(&mut self, key: &str) -> Result<&'a Value> {
        self.used.insert(key.to_owned());
        self.table.get(key).ok_or_else(|| {
            Error::parse(None, Some(&self.full(key)), "missing required field")
        })
    }

    fn section(&mut self, key: &str) -> Result<Reader<'a>> {
        let src = self.src;
        let path = self.full(key);
        match self.get(key)? {
            Value::Table(t) => Ok(Reader::new(src, path, t)),
            _ => Err(self.error(key, "expected a table")),
        }
    }

    fn quantity(&mut self, key: &str, q: Quantity) -> Result<f64> {
        match self.get(key)? {
            Value::String(s) => parse_quantity(s, q).map_err(|m| self.error(key, m)),
            Value::Integer(_) | Value::Float(_) => Err(self.error(
                key,
                format!("bare number has no unit; write it as a string like \"1.0 {}\"", q.display_unit()),
            )),
            _ => Err(self.error(key, "expected a unit-suffixed string")),
        }
    }

    fn quantity_pair(&mut self, key: &str, q: Quantity) -> Result<(f64, f64)> {
        match self.get(key)? {
            Value::Array(items) if items.len() == 2 => {
                let mut out = [0.0; 2];
                for (slot, item) in out.iter_mut().zip(items) {
                    let s = item
                        .as_str()
                        .ok_or_else(|| self.error(key, "expected unit-suffixed strings"))?;
                    *slot = parse_quantity(s, q).map_err(|m| self.error(key, m))?;
                }
                Ok((out[0], out[1]))
            }
            _ => Err(self.error(key, "expected a two-element array [min, max]")),
        }
    }

    fn number(&mut self, key: &str) -> Result<f64> {
        match self.get(key)? {
            Value::Float(f) => Ok(*f),
            Value::Integer(i) => Ok(*i as f64),
            _ => Err(self.error(key, "expected a dimensionless number")),
        }
    }

    fn integer(&mut self, key: &str) -> Result<i64> {
        match self.get(key)? {
            Value::Integer(i) => Ok(*i),
            _ => Err(self.error(key, "expected an integer")),
        }
    }

    fn count(&mut self, key: &str) -> Result<u32> {
        let v = self.integer(key)?;
        u32::try_from(v).map_err(|_| self.error(key, format!("{v} is not a nonnegative count")))
    }

    fn string(&mut self, key: &str) -> Result<String> {
        match self.get(key)? {
            Value::String(s) => Ok(s.clone()),
            _ => Err(self.error(key, "expected a string")),
        }
    }

    fn harmonics(&mut self, key: &str) -> Result<Vec<(u32, f64)>> {
        let items = match self.get(key)? {
            Value::Array(items) => items,
            _ => return Err(self.error(key, "expected an array of [order, amplitude] pairs")),
        };
        items
            .iter()
            .map(|item| match item.as_array().map(Vec::as_slice) {
                Some([Value::Integer(o), amp]) if *o >= 0 => {
                    let a = amp
                        .as_float()
                        .or_else(|| amp.as_integer().map(|i| i as f64))
                        .ok_or_else(|| self.error(key, "harmonic amplitude must be a number"))?;
                    Ok((*o as u32, a))
                }
                _ => Err(self.error(key, "expected [order, amplitude]")),
            })
            .collect()
    }

    fn finish(self) -> Result<()> {
        if let Some(extra) = self.table.keys().find(|k| !self.used.contains(*k)) {
            return Err(self.error(extra, "unknown field"));
        }
        Ok(())
    }
}
