//! Constraint checks and full-factorial sweeps over spec parameters.
//!
//! A candidate is scored by derated stall torque at the lowest nominal
//! voltage per envelope volume. Each constraint reports a signed margin in
//! its own unit; a candidate is feasible when every margin is non-negative.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::electromech::{build_constants, ripple_analysis, stall_analysis, MotorConstants, REFERENCE_TEMPERATURE};
use crate::error::{Error, Result};
use crate::magnetics::{flux_linkage_constant, solve_magnetic_circuit, MagneticCircuitResult};
use crate::model::{active_volume, MotorSpec, VolumeConvention};
use crate::thermal::{stall_case, summarize, Resolution, ThermalSummary};
use crate::units::{fmt_sig9, rpm_to_rad_s, Quantity};

pub const MAX_AXES: usize = 4;
pub const DEFAULT_CANDIDATE_CAP: usize = 10_000;
/// Coarse thermal grid used inside sweeps.
pub const COARSE_RESOLUTION: Resolution = Resolution::new(16, 16);
/// Normalized margin band inside which a verdict is flagged marginal.
pub const MARGINAL_BAND: f64 = 0.02;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstraintSet {
    /// Required core flux density headroom, T (0 means B_core ≤ B_sat).
    pub saturation_headroom: f64,
    /// Supply voltage for the headroom check; `None` uses the spec's lowest
    /// nominal voltage.
    pub nominal_voltage: Option<f64>,
    /// Thermal margin below the lower material rating; `None` uses the
    /// spec's design margin.
    pub thermal_margin: Option<f64>,
    pub max_ripple: f64,
    pub max_outer_diameter: f64,
    pub thermal_resolution: Resolution,
    pub volume_convention: VolumeConvention,
}

impl Default for ConstraintSet {
    fn default() -> Self {
        ConstraintSet {
            saturation_headroom: 0.0,
            nominal_voltage: None,
            thermal_margin: None,
            max_ripple: 0.06,
            max_outer_diameter: 20e-3,
            thermal_resolution: COARSE_RESOLUTION,
            volume_convention: VolumeConvention::EnvelopeCylinder,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConstraintKind {
    Saturation,
    VoltageHeadroom,
    Thermal,
    Ripple,
    OuterDiameter,
}

impl ConstraintKind {
    pub fn name(self) -> &'static str {
        match self {
            ConstraintKind::Saturation => "saturation",
            ConstraintKind::VoltageHeadroom => "voltage_headroom",
            ConstraintKind::Thermal => "thermal",
            ConstraintKind::Ripple => "ripple",
            ConstraintKind::OuterDiameter => "outer_diameter",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstraintMargin {
    pub kind: ConstraintKind,
    /// Signed margin in `unit`; ≥ 0 passes.
    pub margin: f64,
    pub unit: String,
    /// Margin divided by the constraint's limit, for ranking and flagging.
    pub normalized: f64,
    pub pass: bool,
    pub marginal: bool,
}

fn margin(kind: ConstraintKind, margin: f64, unit: &'static str, scale: f64) -> ConstraintMargin {
    let normalized = margin / scale.abs().max(f64::MIN_POSITIVE);
    ConstraintMargin {
        kind,
        margin,
        unit: unit.to_owned(),
        normalized,
        pass: margin >= 0.0,
        marginal: normalized.abs() <= MARGINAL_BAND,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Derived {
    pub constants: MotorConstants,
    pub circuit: MagneticCircuitResult,
    pub thermal_summary: ThermalSummary,
    pub ripple_fraction: f64,
    pub stall_torque_derated: f64,
    pub volume_cm3: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DesignCandidate {
    /// Swept parameter values (SI), in axis order.
    pub parameters: Vec<(String, f64)>,
    pub spec: MotorSpec,
    pub derived: Option<Derived>,
    /// mNm/cm³; 0 when evaluation failed.
    pub objective: f64,
    pub margins: Vec<ConstraintMargin>,
    pub feasible: bool,
    pub marginal: bool,
    /// Why evaluation failed, when it did.
    pub diagnostic: Option<String>,
}

impl DesignCandidate {
    pub fn min_normalized_margin(&self) -> f64 {
        self.margins
            .iter()
            .map(|m| m.normalized)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn margin(&self, kind: ConstraintKind) -> Option<&ConstraintMargin> {
        self.margins.iter().find(|m| m.kind == kind)
    }
}

/// `v_nominal − (ke·ω + I·R)`, volts.
pub fn voltage_headroom(constants: &MotorConstants, speed_rpm: f64, current: f64, v_nominal: f64) -> Result<f64> {
    if !(speed_rpm >= 0.0 && current >= 0.0) {
        return Err(Error::InvalidInput("operating point must be non-negative".into()));
    }
    Ok(v_nominal - (constants.ke * rpm_to_rad_s(speed_rpm) + current * constants.terminal_resistance))
}

fn evaluate(spec: &MotorSpec, constraints: &ConstraintSet) -> Result<(Derived, Vec<ConstraintMargin>, f64)> {
    spec.validate()?;
    let circuit = solve_magnetic_circuit(spec)?;
    let emf = flux_linkage_constant(spec, &circuit)?;
    let constants = build_constants(spec, &emf, REFERENCE_TEMPERATURE)?;

    let (grid, field) = stall_case(spec, constraints.thermal_resolution, spec.thermal.stall_dissipation)?;
    let thermal_summary = summarize(spec, &grid, &field);

    let v_nom = constraints.nominal_voltage.unwrap_or(spec.nominal_voltage_range.0);
    let e = &spec.electrical;
    let headroom = voltage_headroom(&constants, crate::units::rad_s_to_rpm(e.nominal_speed), e.nominal_current, v_nom)?;

    let nominal_torque = constants.kt * e.nominal_current;
    let ripple = if nominal_torque > 0.0 {
        ripple_analysis(spec, nominal_torque)?.ripple_fraction
    } else {
        0.0
    };

    let m = &spec.materials;
    let sat_limit = m.core_saturation_flux - constraints.saturation_headroom;
    let thermal_limit = m.lowest_temp_rating() - constraints.thermal_margin.unwrap_or(spec.thermal.design_margin);
    let margins = vec![
        margin(
            ConstraintKind::Saturation,
            sat_limit - circuit.max_core_flux_density(),
            "T",
            sat_limit,
        ),
        margin(ConstraintKind::VoltageHeadroom, headroom, "V", v_nom),
        margin(
            ConstraintKind::Thermal,
            thermal_limit - field.peak_temperature,
            "K",
            thermal_limit - spec.thermal.ambient,
        ),
        margin(ConstraintKind::Ripple, constraints.max_ripple - ripple, "1", constraints.max_ripple),
        margin(
            ConstraintKind::OuterDiameter,
            constraints.max_outer_diameter - spec.geometry.outer_diameter,
            "m",
            constraints.max_outer_diameter,
        ),
    ];

    let stall = stall_analysis(&constants, v_nom, REFERENCE_TEMPERATURE)?;
    let volume = active_volume(spec, constraints.volume_convention).cubic_centimetres;
    let objective = stall.stall_torque_derated * 1e3 / volume;
    Ok((
        Derived {
            constants,
            circuit,
            thermal_summary,
            ripple_fraction: ripple,
            stall_torque_derated: stall.stall_torque_derated,
            volume_cm3: volume,
        },
        margins,
        objective,
    ))
}

/// Evaluates one design. Evaluation failures (invalid spec, solver
/// non-convergence) give an infeasible candidate carrying the diagnostic.
pub fn evaluate_candidate(spec: &MotorSpec, constraints: &ConstraintSet) -> DesignCandidate {
    candidate(spec.clone(), Vec::new(), constraints)
}

fn candidate(spec: MotorSpec, parameters: Vec<(String, f64)>, constraints: &ConstraintSet) -> DesignCandidate {
    match evaluate(&spec, constraints) {
        Ok((derived, margins, objective)) => {
            let feasible = margins.iter().all(|m| m.pass) && objective > 0.0;
            let marginal = margins.iter().any(|m| m.marginal);
            DesignCandidate {
                parameters,
                spec,
                derived: Some(derived),
                objective,
                margins,
                feasible,
                marginal,
                diagnostic: None,
            }
        }
        Err(e) => DesignCandidate {
            parameters,
            spec,
            derived: None,
            objective: 0.0,
            margins: Vec::new(),
            feasible: false,
            marginal: false,
            diagnostic: Some(e.to_string()),
        },
    }
}

/// Peak stall temperature at `fine` minus the value at the constraint set's
/// coarse resolution, K.
pub fn coarse_fine_delta(spec: &MotorSpec, constraints: &ConstraintSet, fine: Resolution) -> Result<f64> {
    let p = spec.thermal.stall_dissipation;
    let coarse = stall_case(spec, constraints.thermal_resolution, p)?.1.peak_temperature;
    let fine = stall_case(spec, fine, p)?.1.peak_temperature;
    Ok(fine - coarse)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum ParamKind {
    Length,
    Count,
    Number,
    Other(Quantity),
}

/// Spec parameters that can be swept, by dotted name.
const PARAMETERS: &[(&str, ParamKind)] = &[
    ("geometry.pole_pairs", ParamKind::Count),
    ("geometry.outer_diameter", ParamKind::Length),
    ("geometry.inner_diameter", ParamKind::Length),
    ("geometry.air_gap_axial", ParamKind::Length),
    ("geometry.virtual_slots", ParamKind::Count),
    ("geometry.stator_axial_length", ParamKind::Length),
    ("geometry.rotor_axial_length", ParamKind::Length),
    ("geometry.overall_axial_length", ParamKind::Length),
    ("geometry.tooth_fraction", ParamKind::Number),
    ("geometry.housing_wall", ParamKind::Length),
    ("winding.total_layers", ParamKind::Count),
    ("winding.layers_per_module", ParamKind::Count),
    ("winding.layer_pitch", ParamKind::Length),
    ("winding.copper_thickness", ParamKind::Length),
    ("winding.trace_width", ParamKind::Length),
    ("winding.trace_clearance", ParamKind::Length),
    ("winding.modules_in_series", ParamKind::Count),
    ("winding.parallel_branches", ParamKind::Count),
    ("winding.turns_per_layer_per_coil", ParamKind::Count),
    ("materials.magnet_remanence", ParamKind::Other(Quantity::FluxDensity)),
    ("materials.magnet_axial_length", ParamKind::Length),
    ("materials.core_saturation_flux", ParamKind::Other(Quantity::FluxDensity)),
    ("thermal.convection_coefficient", ParamKind::Other(Quantity::HeatTransfer)),
];

pub fn sweepable_parameters() -> impl Iterator<Item = &'static str> {
    PARAMETERS.iter().map(|p| p.0)
}

fn kind_of(name: &str) -> Result<ParamKind> {
    PARAMETERS
        .iter()
        .find(|p| p.0 == name)
        .map(|p| p.1)
        .ok_or_else(|| Error::InvalidInput(format!("`{name}` is not a sweepable parameter")))
}

/// Parses a parameter value as written on the command line: unit-suffixed
/// for dimensional parameters, bare for counts and ratios.
pub fn parse_parameter_value(name: &str, text: &str) -> Result<f64> {
    let parsed = match kind_of(name)? {
        ParamKind::Length => crate::units::parse_quantity(text, Quantity::Length),
        ParamKind::Other(q) => crate::units::parse_quantity(text, q),
        ParamKind::Count | ParamKind::Number => text.trim().parse::<f64>().map_err(|e| e.to_string()),
    };
    parsed.map_err(|m| Error::parse(None, Some(name), m))
}

pub fn set_parameter(spec: &mut MotorSpec, name: &str, value: f64) -> Result<()> {
    let count = |v: f64| -> Result<u32> {
        if v >= 0.0 && v.fract() == 0.0 && v <= f64::from(u32::MAX) {
            Ok(v as u32)
        } else {
            Err(Error::InvalidInput(format!("`{name}` needs a whole number, got {v}")))
        }
    };
    let g = &mut spec.geometry;
    let w = &mut spec.winding;
    let m = &mut spec.materials;
    match name {
        "geometry.pole_pairs" => g.pole_pairs = count(value)?,
        "geometry.outer_diameter" => g.outer_diameter = value,
        "geometry.inner_diameter" => g.inner_diameter = value,
        "geometry.air_gap_axial" => g.air_gap_axial = value,
        "geometry.virtual_slots" => g.virtual_slots = count(value)?,
        "geometry.stator_axial_length" => g.stator_axial_length = value,
        "geometry.rotor_axial_length" => g.rotor_axial_length = value,
        "geometry.overall_axial_length" => g.overall_axial_length = value,
        "geometry.tooth_fraction" => g.tooth_fraction = value,
        "geometry.housing_wall" => g.housing_wall = value,
        "winding.total_layers" => w.total_layers = count(value)?,
        "winding.layers_per_module" => w.layers_per_module = count(value)?,
        "winding.layer_pitch" => w.layer_pitch = value,
        "winding.copper_thickness" => w.copper_thickness = value,
        "winding.trace_width" => w.trace_width = value,
        "winding.trace_clearance" => w.trace_clearance = value,
        "winding.modules_in_series" => w.modules_in_series = count(value)?,
        "winding.parallel_branches" => w.parallel_branches = count(value)?,
        "winding.turns_per_layer_per_coil" => w.turns_per_layer_per_coil = count(value)?,
        "materials.magnet_remanence" => m.magnet_remanence = value,
        "materials.magnet_axial_length" => m.magnet_axial_length = value,
        "materials.core_saturation_flux" => m.core_saturation_flux = value,
        "thermal.convection_coefficient" => spec.thermal.convection_coefficient = value,
        other => return Err(Error::InvalidInput(format!("`{other}` is not a sweepable parameter"))),
    }
    Ok(())
}

/// One sweep axis: `steps` evenly spaced values from `start` to `stop`
/// inclusive (SI). Zero steps leaves the base value untouched.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub parameter: String,
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
}

impl Axis {
    pub fn values(&self) -> Vec<f64> {
        match self.steps {
            0 => Vec::new(),
            1 => vec![self.start],
            n => (0..n)
                .map(|k| {
                    if k == n - 1 {
                        self.stop
                    } else {
                        self.start + (self.stop - self.start) * k as f64 / (n - 1) as f64
                    }
                })
                .collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    /// Ranked best first.
    pub feasible: Vec<DesignCandidate>,
    /// In parameter order.
    pub infeasible: Vec<DesignCandidate>,
}

impl SweepResult {
    pub fn len(&self) -> usize {
        self.feasible.len() + self.infeasible.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn compare_parameters(a: &DesignCandidate, b: &DesignCandidate) -> Ordering {
    for (x, y) in a.parameters.iter().zip(&b.parameters) {
        match x.1.total_cmp(&y.1) {
            Ordering::Equal => {}
            o => return o,
        }
    }
    Ordering::Equal
}

/// Best first: objective, then the larger worst-case normalized margin, then
/// parameter values in axis order.
pub fn rank(a: &DesignCandidate, b: &DesignCandidate) -> Ordering {
    b.objective
        .total_cmp(&a.objective)
        .then_with(|| b.min_normalized_margin().total_cmp(&a.min_normalized_margin()))
        .then_with(|| compare_parameters(a, b))
}

/// Full-factorial sweep of `base` over `axes`, evaluated in parallel.
pub fn sweep(base: &MotorSpec, axes: &[Axis], constraints: &ConstraintSet, cap: usize) -> Result<SweepResult> {
    if axes.len() > MAX_AXES {
        return Err(Error::InvalidInput(format!("at most {MAX_AXES} sweep axes, got {}", axes.len())));
    }
    let mut columns = Vec::new();
    for axis in axes {
        kind_of(&axis.parameter)?;
        if axes.iter().filter(|a| a.parameter == axis.parameter).count() > 1 {
            return Err(Error::InvalidInput(format!("parameter `{}` swept twice", axis.parameter)));
        }
        let values = axis.values();
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite value on axis `{}`", axis.parameter)));
        }
        if !values.is_empty() {
            columns.push((axis.parameter.clone(), values));
        }
    }
    let total = columns.iter().try_fold(1usize, |acc, c| acc.checked_mul(c.1.len()));
    match total {
        Some(n) if n <= cap => {}
        _ => {
            return Err(Error::InvalidInput(format!(
                "sweep exceeds the candidate cap of {cap}"
            )))
        }
    }
    let total = total.unwrap_or(0);

    let points: Vec<Vec<(String, f64)>> = (0..total)
        .map(|mut k| {
            let mut p = vec![(String::new(), 0.0); columns.len()];
            for (slot, (name, values)) in columns.iter().enumerate().rev() {
                p[slot] = (name.clone(), values[k % values.len()]);
                k /= values.len();
            }
            p
        })
        .collect();

    let evaluated: Vec<DesignCandidate> = points
        .into_par_iter()
        .map(|params| {
            let mut spec = base.clone();
            for (name, v) in &params {
                if let Err(e) = set_parameter(&mut spec, name, *v) {
                    return DesignCandidate {
                        parameters: params.clone(),
                        spec,
                        derived: None,
                        objective: 0.0,
                        margins: Vec::new(),
                        feasible: false,
                        marginal: false,
                        diagnostic: Some(e.to_string()),
                    };
                }
            }
            candidate(spec, params, constraints)
        })
        .collect();

    let (mut feasible, mut infeasible): (Vec<_>, Vec<_>) = evaluated.into_iter().partition(|c| c.feasible);
    feasible.sort_by(rank);
    infeasible.sort_by(compare_parameters);
    Ok(SweepResult { feasible, infeasible })
}

/// One CSV row per candidate: swept parameters, objective, margins, flags.
pub fn sweep_csv(result: &SweepResult) -> String {
    let all: Vec<&DesignCandidate> = result.feasible.iter().chain(&result.infeasible).collect();
    let params: Vec<&str> = all
        .first()
        .map(|c| c.parameters.iter().map(|p| p.0.as_str()).collect())
        .unwrap_or_default();
    let kinds = [
        ConstraintKind::Saturation,
        ConstraintKind::VoltageHeadroom,
        ConstraintKind::Thermal,
        ConstraintKind::Ripple,
        ConstraintKind::OuterDiameter,
    ];
    let mut header: Vec<String> = vec!["rank".into()];
    header.extend(params.iter().map(|p| p.to_string()));
    header.push("objective_mNm_per_cm3".into());
    header.extend(kinds.iter().map(|k| format!("margin_{}", k.name())));
    header.extend(["feasible", "marginal", "diagnostic"].map(String::from));

    let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
    w.write_record(&header).expect("in-memory write");
    for (idx, c) in all.iter().enumerate() {
        let mut row: Vec<String> = vec![if c.feasible { (idx + 1).to_string() } else { String::new() }];
        row.extend(c.parameters.iter().map(|p| fmt_sig9(p.1)));
        row.push(fmt_sig9(c.objective));
        for k in kinds {
            row.push(c.margin(k).map(|m| fmt_sig9(m.margin)).unwrap_or_default());
        }
        row.push(c.feasible.to_string());
        row.push(c.marginal.to_string());
        row.push(c.diagnostic.clone().unwrap_or_default());
        w.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv")
}
