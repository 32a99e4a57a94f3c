//! Unit-suffixed quantities as they appear in spec files and reports.
//!
//! Values are held in SI internally (temperatures in degrees Celsius, speeds
//! in rad/s). Each [`Quantity`] has a preferred display unit matching how
//! motor datasheets are usually written (mm, mNm, rpm) and a SI fallback
//! used when the display form would not round-trip bit-exactly.

use std::f64::consts::PI;

/// Physical dimension of a spec-file value.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Quantity {
    Length,
    FluxDensity,
    Resistivity,
    PerKelvin,
    Density,
    SpecificHeat,
    Conductivity,
    HeatTransfer,
    Temperature,
    TemperatureDelta,
    Voltage,
    Current,
    Speed,
    Inductance,
    Power,
    Torque,
}

struct UnitDef {
    symbol: &'static str,
    quantity: Quantity,
    factor: f64,
}

const RPM: f64 = 2.0 * PI / 60.0;

const UNITS: &[UnitDef] = &[
    UnitDef { symbol: "m", quantity: Quantity::Length, factor: 1.0 },
    UnitDef { symbol: "mm", quantity: Quantity::Length, factor: 1e-3 },
    UnitDef { symbol: "um", quantity: Quantity::Length, factor: 1e-6 },
    UnitDef { symbol: "T", quantity: Quantity::FluxDensity, factor: 1.0 },
    UnitDef { symbol: "mT", quantity: Quantity::FluxDensity, factor: 1e-3 },
    UnitDef { symbol: "ohm*m", quantity: Quantity::Resistivity, factor: 1.0 },
    UnitDef { symbol: "1/K", quantity: Quantity::PerKelvin, factor: 1.0 },
    UnitDef { symbol: "kg/m^3", quantity: Quantity::Density, factor: 1.0 },
    UnitDef { symbol: "J/(kg*K)", quantity: Quantity::SpecificHeat, factor: 1.0 },
    UnitDef { symbol: "W/(m*K)", quantity: Quantity::Conductivity, factor: 1.0 },
    UnitDef { symbol: "W/(m^2*K)", quantity: Quantity::HeatTransfer, factor: 1.0 },
    UnitDef { symbol: "degC", quantity: Quantity::Temperature, factor: 1.0 },
    UnitDef { symbol: "K", quantity: Quantity::TemperatureDelta, factor: 1.0 },
    UnitDef { symbol: "V", quantity: Quantity::Voltage, factor: 1.0 },
    UnitDef { symbol: "A", quantity: Quantity::Current, factor: 1.0 },
    UnitDef { symbol: "mA", quantity: Quantity::Current, factor: 1e-3 },
    UnitDef { symbol: "rad/s", quantity: Quantity::Speed, factor: 1.0 },
    UnitDef { symbol: "rpm", quantity: Quantity::Speed, factor: RPM },
    UnitDef { symbol: "H", quantity: Quantity::Inductance, factor: 1.0 },
    UnitDef { symbol: "mH", quantity: Quantity::Inductance, factor: 1e-3 },
    UnitDef { symbol: "W", quantity: Quantity::Power, factor: 1.0 },
    UnitDef { symbol: "N*m", quantity: Quantity::Torque, factor: 1.0 },
    UnitDef { symbol: "mNm", quantity: Quantity::Torque, factor: 1e-3 },
];

impl Quantity {
    /// Unit used when writing a value.
    pub fn display_unit(self) -> &'static str {
        match self {
            Quantity::Length => "mm",
            Quantity::Torque => "mNm",
            Quantity::Speed => "rpm",
            Quantity::Inductance => "mH",
            other => other.si_unit(),
        }
    }

    pub fn si_unit(self) -> &'static str {
        match self {
            Quantity::Length => "m",
            Quantity::FluxDensity => "T",
            Quantity::Resistivity => "ohm*m",
            Quantity::PerKelvin => "1/K",
            Quantity::Density => "kg/m^3",
            Quantity::SpecificHeat => "J/(kg*K)",
            Quantity::Conductivity => "W/(m*K)",
            Quantity::HeatTransfer => "W/(m^2*K)",
            Quantity::Temperature => "degC",
            Quantity::TemperatureDelta => "K",
            Quantity::Voltage => "V",
            Quantity::Current => "A",
            Quantity::Speed => "rad/s",
            Quantity::Inductance => "H",
            Quantity::Power => "W",
            Quantity::Torque => "N*m",
        }
    }
}

fn lookup(symbol: &str, quantity: Quantity) -> Option<f64> {
    UNITS
        .iter()
        .find(|u| u.symbol == symbol && u.quantity == quantity)
        .map(|u| u.factor)
}

/// Parses `"<number> <unit>"` into the SI value of `quantity`.
pub fn parse_quantity(text: &str, quantity: Quantity) -> Result<f64, String> {
    let text = text.trim();
    let (number, unit) = text
        .split_once(char::is_whitespace)
        .ok_or_else(|| format!("`{text}` has no unit; expected e.g. `1.0 {}`", quantity.display_unit()))?;
    let unit = unit.trim();
    let value: f64 = number
        .parse()
        .map_err(|_| format!("`{number}` is not a number"))?;
    if !value.is_finite() {
        return Err(format!("`{number}` is not finite"));
    }
    let factor = lookup(unit, quantity).ok_or_else(|| {
        let accepted: Vec<_> = UNITS
            .iter()
            .filter(|u| u.quantity == quantity)
            .map(|u| u.symbol)
            .collect();
        format!("unit `{unit}` not accepted here (accepted: {})", accepted.join(", "))
    })?;
    Ok(value * factor)
}

/// Formats an SI value so that [`parse_quantity`] returns exactly the same bits.
pub fn format_quantity(si_value: f64, quantity: Quantity) -> String {
    let display = quantity.display_unit();
    let factor = lookup(display, quantity).expect("display unit registered");
    let shown = si_value / factor;
    let candidate = format!("{shown:?} {display}");
    if parse_quantity(&candidate, quantity).ok() == Some(si_value) {
        return candidate;
    }
    format!("{si_value:?} {}", quantity.si_unit())
}

/// Fixed-precision float text used for all CSV/JSON artifacts: nine
/// significant digits, plain notation for ordinary magnitudes.
pub fn fmt_sig9(value: f64) -> String {
    if value == 0.0 || !value.is_finite() {
        return if value.is_finite() { "0".to_owned() } else { format!("{value}") };
    }
    let magnitude = value.abs().log10().floor() as i32;
    if !(-4..9).contains(&magnitude) {
        return format!("{value:.8e}");
    }
    let decimals = (8 - magnitude).max(0) as usize;
    let text = format!("{value:.decimals$}");
    let trimmed = if text.contains('.') {
        text.trim_end_matches('0').trim_end_matches('.')
    } else {
        &text
    };
    if trimmed == "-0" {
        "0".to_owned()
    } else {
        trimmed.to_owned()
    }
}

/// Rounds to nine significant digits (the JSON counterpart of [`fmt_sig9`]).
pub fn round_sig9(value: f64) -> f64 {
    fmt_sig9(value).parse().unwrap_or(value)
}

pub fn rpm_to_rad_s(rpm: f64) -> f64 {
    rpm * RPM
}

pub fn rad_s_to_rpm(rad_s: f64) -> f64 {
    rad_s / RPM
}
