use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::electromech::{
    build_constants, cogging_orders, max_efficiency, performance_curve, ripple_analysis, stall_analysis, LossModel,
    REFERENCE_TEMPERATURE,
};
use crate::error::{Error, Result};
use crate::magnetics::{back_emf_waveform, flux_linkage_constant, solve_magnetic_circuit};
use crate::model::{active_volume, copper_fill_factor, MotorSpec, VolumeConvention};
use crate::thermal::{build_grid, continuous_stall_torque, spec_boundary, steady_state_solve, Region, Resolution, DEFAULT_RESOLUTION};
use crate::units::{rad_s_to_rpm, round_sig9};

pub const DATASHEET_FORMAT: &str = "afpm-datasheet/1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasheetRow {
    pub key: String,
    /// Row label in the usual datasheet wording.
    pub name: String,
    pub unit: String,
    pub value: f64,
    /// Published value from the spec's reference table, when there is one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<f64>,
    pub condition: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Datasheet {
    pub format: String,
    pub motor: String,
    pub rows: Vec<DatasheetRow>,
}

impl Datasheet {
    pub fn get(&self, key: &str) -> Option<&DatasheetRow> {
        self.rows.iter().find(|r| r.key == key)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("datasheet serializes") + "\n"
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let d: Datasheet = serde_json::from_str(text).map_err(|e| Error::parse(Some(e.line()), None, e.to_string()))?;
        if d.format != DATASHEET_FORMAT {
            return Err(Error::parse(None, Some("format"), format!("expected `{DATASHEET_FORMAT}`, got `{}`", d.format)));
        }
        Ok(d)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasheetOptions {
    /// Supply voltage and PWM duty for the speed/efficiency rows.
    pub supply_voltage: f64,
    pub duty: f64,
    /// Voltage for the stall rows; `None` uses the lowest nominal voltage.
    pub stall_voltage: Option<f64>,
    pub resolution: Resolution,
    /// Continuous-rating temperature; `None` uses the steady peak reached at
    /// the spec's stall dissipation.
    pub continuous_limit: Option<f64>,
}

impl Default for DatasheetOptions {
    fn default() -> Self {
        DatasheetOptions {
            supply_voltage: 48.0,
            duty: 0.25,
            stall_voltage: None,
            resolution: DEFAULT_RESOLUTION,
            continuous_limit: None,
        }
    }
}

/// Evaluates the whole model chain for `spec` into datasheet rows. Values
/// are rounded to nine significant digits so the JSON form is exact.
pub fn build_datasheet(spec: &MotorSpec, opts: &DatasheetOptions) -> Result<Datasheet> {
    let circuit = solve_magnetic_circuit(spec)?;
    let emf = flux_linkage_constant(spec, &circuit)?;
    let c = build_constants(spec, &emf, REFERENCE_TEMPERATURE)?;
    let e = &spec.electrical;
    let loss = LossModel {
        friction_torque: e.friction_torque,
        fixed_loss: e.fixed_loss,
    };
    let curve = performance_curve(&c, opts.supply_voltage, opts.duty, loss, 101)?;
    let v_eff = curve.effective_voltage;
    let (eta, _) = max_efficiency(&c, v_eff, loss);
    let v_stall = opts.stall_voltage.unwrap_or(spec.nominal_voltage_range.0);

    let grid = build_grid(spec, opts.resolution, spec_boundary(spec))?;
    let stall_field = steady_state_solve(&grid, spec.thermal.stall_dissipation, Region::Winding)?;
    let limit = opts.continuous_limit.unwrap_or(stall_field.peak_temperature);
    let stall = stall_analysis(&c, v_stall, limit)?;
    let cont = continuous_stall_torque(spec, &c, &grid, limit)?;
    let ripple = ripple_analysis(spec, c.kt * e.nominal_current)?;
    let cogging = cogging_orders(&spec.geometry)?;
    let volume = active_volume(spec, VolumeConvention::EnvelopeCylinder);
    let emf_peak = back_emf_waveform(&emf, 3000.0, 720)?.peak;

    let cond_curve = format!("{} V x {} duty = {} V effective", opts.supply_voltage, opts.duty, v_eff);
    let cond_stall = format!("{v_stall} V supply, saturation derating applied");
    let cond_cont = format!("steady peak temperature limit {limit:.1} degC");
    let cold = format!("{REFERENCE_TEMPERATURE} degC");

    let reference = |key: &str| spec.reference.get(key).copied();
    let mut rows = Vec::new();
    let mut push = |key: &str, name: &str, unit: &str, value: f64, rkey: Option<&str>, condition: &str, note: Option<&str>| {
        rows.push(DatasheetRow {
            key: key.into(),
            name: name.into(),
            unit: unit.into(),
            value: round_sig9(value),
            reference: rkey.and_then(reference),
            condition: condition.into(),
            note: note.map(str::to_owned),
        });
    };

    push("no_load_speed", "No load speed (rpm)", "rpm", rad_s_to_rpm(curve.points[0].speed), Some("no_load_speed_rpm"), &cond_curve, None);
    push("nominal_speed", "Nominal speed (rpm)", "rpm", rad_s_to_rpm(e.nominal_speed), Some("nominal_speed_rpm"), "operating point", Some("spec input"));
    push("nominal_torque", "Nominal torque (mNm)", "mNm", c.kt * e.nominal_current * 1e3, Some("nominal_torque_mNm"), &cold, None);
    push("nominal_current", "Nominal current (A)", "A", e.nominal_current, Some("nominal_current_A"), "operating point", Some("spec input"));
    push("stall_torque", "Stall torque (mNm)", "mNm", stall.stall_torque_derated * 1e3, Some("stall_torque_mNm"), &cond_stall, None);
    push("stall_torque_ideal", "Stall torque, no saturation (mNm)", "mNm", stall.stall_torque_cold * 1e3, None, &cold, None);
    push("saturation_factor", "Saturation derating factor", "1", stall.saturation_factor, None, &cond_stall, Some("derated / ideal stall torque"));
    push("continuous_stall_torque", "Continuous stall torque (mNm)", "mNm", cont.torque * 1e3, Some("continuous_stall_torque_mNm"), &cond_cont, None);
    push("stall_current", "Stall current (A)", "A", stall.stall_current, Some("stall_current_A"), &cond_stall, None);
    push("continuous_stall_current", "Continuous stall current (A)", "A", cont.current, Some("continuous_stall_current_A"), &cond_cont, None);
    push("continuous_stall_dissipation", "Continuous stall dissipation (W)", "W", cont.dissipation, None, &cond_cont, None);
    push("terminal_resistance", "Terminal Resistance (Ohm)", "ohm", c.terminal_resistance, Some("terminal_resistance_ohm"), &cold, None);
    push("terminal_resistance_hot", "Terminal Resistance, hot (Ohm)", "ohm", cont.resistance, None, &cond_cont, None);
    push("terminal_inductance", "Terminal inductance (mH)", "mH", c.terminal_inductance * 1e3, Some("terminal_inductance_mH"), "", Some("spec input"));
    push("torque_constant", "Torque constant (mNm/A)", "mNm/A", c.kt * 1e3, Some("torque_constant_mNm_per_A"), &cold, None);
    push("torque_constant_hot", "Torque constant, hot (mNm/A)", "mNm/A", cont.kt * 1e3, None, &cond_cont, None);
    push("speed_constant", "Speed constant (rpm/V)", "rpm/V", c.speed_constant, Some("speed_constant_rpm_per_V"), &cold, None);
    push("cogging_torque", "Cogging torque (mNm)", "mNm", spec.ripple.cogging_peak * 1e3, None, "", Some("calibration input, not a prediction"));
    push("cogging_periods_per_rev", "Cogging periods per revolution", "1", cogging.fundamental_period_per_rev as f64, None, "LCM(poles, slots)", None);
    push("torque_ripple", "Torque ripple at nominal torque (%)", "%", ripple.ripple_fraction * 100.0, None, "harmonic model", None);
    push("max_efficiency", "Max. efficiency (%)", "%", eta * 100.0, Some("max_efficiency_pct"), &cond_curve, None);
    push("back_emf_peak_3000rpm", "Back-EMF peak at 3000 rpm (V)", "V", emf_peak, Some("emf_peak_3000rpm_V"), "phase, 3000 rpm", None);
    push("stall_peak_temperature", "Peak temperature at stall dissipation (degC)", "degC", stall_field.peak_temperature, Some("stall_peak_temperature_degC"), &format!("{} W", spec.thermal.stall_dissipation), None);
    push("copper_fill_factor", "Copper fill factor (%)", "%", copper_fill_factor(spec) * 100.0, None, "", None);
    push("volume", "Envelope volume (cm3)", "cm3", volume.cubic_centimetres, None, &volume.convention.to_string(), None);
    push(
        "stall_torque_density",
        "Stall torque density (mNm/cm3)",
        "mNm/cm3",
        stall.stall_torque_derated * 1e3 / volume.cubic_centimetres,
        None,
        &format!("{cond_stall}; {}", volume.convention),
        Some("published Nm/cm3 figures are unit-inconsistent with torque/volume; no reference given"),
    );

    Ok(Datasheet {
        format: DATASHEET_FORMAT.into(),
        motor: spec.name.clone(),
        rows,
    })
}
