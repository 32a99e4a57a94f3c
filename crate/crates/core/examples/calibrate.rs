//! Recomputes the calibrated constants of the prototype spec from its
//! datasheet anchors and prints them in spec-file form.

use afpm_core::electromech::{build_constants, calibrate_copper_thickness, calibrate_friction, REFERENCE_TEMPERATURE};
use afpm_core::magnetics::{calibrate_emf, flux_linkage_constant, solve_magnetic_circuit};
use afpm_core::model::prototype;
use afpm_core::thermal::{calibrate_convection, DEFAULT_RESOLUTION};

fn main() -> afpm_core::Result<()> {
    let mut spec = prototype();
    let anchor = |k: &str| spec.reference[k];

    let t = calibrate_copper_thickness(&spec, anchor("terminal_resistance_ohm"))?;
    spec.winding.copper_thickness = t;
    println!("winding.copper_thickness = \"{:.6} mm\"", t * 1e3);

    let c = calibrate_emf(&spec, anchor("emf_peak_3000rpm_V"), 3000.0, 720)?;
    spec.magnetics.emf_calibration = c;
    println!("magnetics.emf_calibration = {c:.6}");

    let circuit = solve_magnetic_circuit(&spec)?;
    let emf = flux_linkage_constant(&spec, &circuit)?;
    let constants = build_constants(&spec, &emf, REFERENCE_TEMPERATURE)?;
    let target = anchor("max_efficiency_pct") / 100.0;
    let tf = calibrate_friction(&constants, 12.0, spec.electrical.fixed_loss, target)?;
    println!("electrical.friction_torque = \"{:.6} mNm\"", tf * 1e3);

    // derating that maps the published stall current onto the published stall torque
    let kt = anchor("torque_constant_mNm_per_A") / 1e3;
    let i_eff = anchor("stall_torque_mNm") / 1e3 / kt;
    let i0 = spec.electrical.saturation_current;
    let f = (i_eff - i0) / (anchor("stall_current_A") - i0);
    println!("electrical.saturation_torque_factor = {f:.6}");

    let h = calibrate_convection(&spec, DEFAULT_RESOLUTION, spec.thermal.stall_dissipation, anchor("stall_peak_temperature_degC"))?;
    println!("thermal.convection_coefficient = \"{h:.4} W/(m^2*K)\"");
    Ok(())
}
