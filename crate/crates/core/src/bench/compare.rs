use serde::{Deserialize, Serialize};

use super::datasheet::Datasheet;
use super::fit::fit_constants;
use super::measurements::MeasurementSet;
use crate::electromech::{build_constants, REFERENCE_TEMPERATURE};
use crate::error::{Error, Result};
use crate::magnetics::{back_emf_waveform, flux_linkage_constant, solve_magnetic_circuit, BackEmfModel};
use crate::model::MotorSpec;
use crate::thermal::{stall_case, Resolution, DEFAULT_RESOLUTION};
use crate::units::rad_s_to_rpm;

/// What the relative error is taken against.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReferenceBasis {
    /// `|model − measured| / |measured|`.
    Measured,
    /// `|model − measured| / |model|`, for checks phrased as "within x% of
    /// the simulated value".
    Model,
    /// Temperatures compared as rise over ambient, measured rise in the
    /// denominator.
    KelvinRise,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    /// Shown for context, excluded from the overall verdict.
    Info,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub quantity: String,
    pub unit: String,
    pub model_value: f64,
    pub measured_value: f64,
    pub relative_error: f64,
    pub tolerance: f64,
    pub basis: ReferenceBasis,
    pub verdict: Verdict,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub rows: Vec<ComparisonRow>,
    pub pass: bool,
}

impl ComparisonReport {
    fn new(rows: Vec<ComparisonRow>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::NoOverlap);
        }
        let pass = rows.iter().all(|r| r.verdict != Verdict::Fail);
        Ok(ComparisonReport { rows, pass })
    }

    pub fn row(&self, quantity: &str) -> Option<&ComparisonRow> {
        self.rows.iter().find(|r| r.quantity == quantity)
    }
}

pub fn relative_error(model: f64, measured: f64, basis: ReferenceBasis) -> f64 {
    let d = (model - measured).abs();
    let denom = match basis {
        ReferenceBasis::Model => model.abs(),
        ReferenceBasis::Measured | ReferenceBasis::KelvinRise => measured.abs(),
    };
    if d == 0.0 {
        0.0
    } else if denom == 0.0 {
        f64::INFINITY
    } else {
        d / denom
    }
}

pub fn row(quantity: &str, unit: &str, model: f64, measured: f64, tolerance: f64, basis: ReferenceBasis) -> ComparisonRow {
    let e = relative_error(model, measured, basis);
    ComparisonRow {
        quantity: quantity.to_owned(),
        unit: unit.to_owned(),
        model_value: model,
        measured_value: measured,
        relative_error: e,
        tolerance,
        basis,
        verdict: if e <= tolerance { Verdict::Pass } else { Verdict::Fail },
    }
}

fn info(mut r: ComparisonRow) -> ComparisonRow {
    r.verdict = Verdict::Info;
    r
}

/// Relative tolerances per comparison family.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub emf: f64,
    pub thermal: f64,
    pub constants: f64,
}

impl Tolerances {
    pub fn uniform(t: f64) -> Self {
        Tolerances {
            emf: t,
            thermal: t,
            constants: t,
        }
    }
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances::uniform(0.05)
    }
}

/// Model quantities that measurements can be held against.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelOutputs {
    pub kt: f64,
    pub terminal_resistance: f64,
    pub emf: BackEmfModel,
    pub ambient: f64,
    /// Steady peak temperature rise per watt of winding dissipation, K/W.
    pub thermal_rise_per_watt: f64,
}

impl ModelOutputs {
    pub fn from_spec(spec: &MotorSpec) -> Result<Self> {
        Self::from_spec_at(spec, DEFAULT_RESOLUTION)
    }

    pub fn from_spec_at(spec: &MotorSpec, resolution: Resolution) -> Result<Self> {
        let circuit = solve_magnetic_circuit(spec)?;
        let emf = flux_linkage_constant(spec, &circuit)?;
        let c = build_constants(spec, &emf, REFERENCE_TEMPERATURE)?;
        let (_, field) = stall_case(spec, resolution, 1.0)?;
        Ok(ModelOutputs {
            kt: c.kt,
            terminal_resistance: c.terminal_resistance,
            emf,
            ambient: spec.thermal.ambient,
            thermal_rise_per_watt: field.peak_temperature - spec.thermal.ambient,
        })
    }

    pub fn peak_temperature(&self, dissipation: f64) -> f64 {
        self.ambient + dissipation * self.thermal_rise_per_watt
    }
}

/// Per-quantity comparison of model outputs against whatever the measurement
/// set carries: EMF peak, stall thermal point and fitted constants.
pub fn compare(model: &ModelOutputs, measured: &MeasurementSet, tol: &Tolerances) -> Result<ComparisonReport> {
    let mut rows = Vec::new();
    if let Some(w) = &measured.emf_waveform {
        if !w.emf.is_empty() {
            let m = back_emf_waveform(&model.emf, rad_s_to_rpm(w.speed), 720)?.peak;
            rows.push(row("emf_peak", "V", m, w.peak(), tol.emf, ReferenceBasis::Model));
        }
    }
    if let Some(t) = &measured.thermal {
        let ambient = t.ambient.unwrap_or(model.ambient);
        let model_peak = model.peak_temperature(t.dissipation);
        rows.push(row(
            "stall_temperature_rise",
            "K",
            model_peak - model.ambient,
            t.peak_temperature - ambient,
            tol.thermal,
            ReferenceBasis::KelvinRise,
        ));
        rows.push(info(row(
            "stall_peak_temperature",
            "degC",
            model_peak,
            t.peak_temperature,
            tol.thermal,
            ReferenceBasis::Measured,
        )));
    }
    if measured.records.len() >= 2 {
        if let Ok(fit) = fit_constants(measured) {
            rows.push(row("torque_constant", "mNm/A", model.kt * 1e3, fit.kt * 1e3, tol.constants, ReferenceBasis::Measured));
            rows.push(row(
                "terminal_resistance",
                "ohm",
                model.terminal_resistance,
                fit.terminal_resistance,
                tol.constants,
                ReferenceBasis::Measured,
            ));
            // Same quantity as the EMF peak row, so the same basis.
            rows.push(row(
                "back_emf_constant",
                "mV*s/rad",
                model.emf.ke_phase * 1e3,
                fit.ke * 1e3,
                tol.emf,
                ReferenceBasis::Model,
            ));
        }
    }
    ComparisonReport::new(rows)
}

/// Row-by-row comparison of two datasheets on their shared keys.
pub fn compare_datasheets(model: &Datasheet, measured: &Datasheet, tolerance: f64) -> Result<ComparisonReport> {
    let rows = model
        .rows
        .iter()
        .filter_map(|m| {
            measured
                .rows
                .iter()
                .find(|x| x.key == m.key)
                .map(|x| row(&m.key, &m.unit, m.value, x.value, tolerance, ReferenceBasis::Measured))
        })
        .collect();
    ComparisonReport::new(rows)
}

/// Torque-density ratio between two motors from their stall torques and
/// volumes, checked against a claimed ratio.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityRatioReport {
    pub ours_torque_mnm: f64,
    pub ours_volume_cm3: f64,
    pub other_torque_mnm: f64,
    pub other_volume_cm3: f64,
    pub ours_density_mnm_per_cm3: f64,
    pub other_density_mnm_per_cm3: f64,
    pub ratio: f64,
    pub claimed_ratio: f64,
    pub relative_error: f64,
    pub tolerance: f64,
    pub pass: bool,
    /// Published absolute densities that do not match torque over volume.
    pub unit_inconsistent: Option<UnitInconsistency>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnitInconsistency {
    pub published: f64,
    pub published_unit: String,
    pub computed_in_published_unit: f64,
    /// published / computed.
    pub factor: f64,
}

pub fn density_ratio(
    ours: (f64, f64),
    other: (f64, f64),
    claimed_ratio: f64,
    tolerance: f64,
    published_ours_nm_per_cm3: Option<f64>,
) -> Result<DensityRatioReport> {
    let (t1, v1) = ours;
    let (t2, v2) = other;
    if !(t1 > 0.0 && v1 > 0.0 && t2 > 0.0 && v2 > 0.0) {
        return Err(Error::InvalidInput("torques and volumes must be > 0".into()));
    }
    let d1 = t1 / v1;
    let d2 = t2 / v2;
    let ratio = d1 / d2;
    let e = relative_error(ratio, claimed_ratio, ReferenceBasis::Measured);
    // A published figure within 10% of torque/volume in Nm/cm³ would be consistent.
    let unit_inconsistent = published_ours_nm_per_cm3.and_then(|p| {
        let computed = d1 * 1e-3;
        let factor = p / computed;
        ((factor - 1.0).abs() > 0.1).then(|| UnitInconsistency {
            published: p,
            published_unit: "Nm/cm^3".into(),
            computed_in_published_unit: computed,
            factor,
        })
    });
    Ok(DensityRatioReport {
        ours_torque_mnm: t1,
        ours_volume_cm3: v1,
        other_torque_mnm: t2,
        other_volume_cm3: v2,
        ours_density_mnm_per_cm3: d1,
        other_density_mnm_per_cm3: d2,
        ratio,
        claimed_ratio,
        relative_error: e,
        tolerance,
        pass: e <= tolerance,
        unit_inconsistent,
    })
}
