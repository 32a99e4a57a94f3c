//! Sectioned measurement CSV (`afpm-measurements/1`).
//!
//! ```text
//! # format: afpm-measurements/1
//! # section: dyno
//! voltage_V,current_A,speed_rpm,torque_mNm,timestamp_s
//! 12,0.131,3480,0.5,0.0
//! # section: phase
//! phase,resistance_ohm,inductance_mH
//! AB,4.70,3.00
//! # section: emf speed_rpm=3000
//! time_s,emf_V
//! # section: thermal
//! dissipation_W,peak_temp_degC,ambient_degC
//! ```
//!
//! Every numeric column name ends in a unit suffix. Other `#` lines are
//! comments. Only the dyno section is required to be present for fits.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::rpm_to_rad_s;

pub const FORMAT_LINE: &str = "# format: afpm-measurements/1";

/// One dynamometer sample, SI (V, A, rad/s, N·m, s).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DynoRecord {
    pub voltage: f64,
    pub current: f64,
    pub speed: f64,
    pub torque: f64,
    pub timestamp: Option<f64>,
}

/// Terminal-pair resistances (Ω) and inductances (H).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerPhase {
    pub labels: [String; 3],
    pub resistances: [f64; 3],
    pub inductances: Option<[f64; 3]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmfWaveform {
    /// rad/s.
    pub speed: f64,
    pub time: Vec<f64>,
    pub emf: Vec<f64>,
}

impl EmfWaveform {
    pub fn peak(&self) -> f64 {
        self.emf.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThermalMeasurement {
    pub dissipation: f64,
    pub peak_temperature: f64,
    pub ambient: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SkippedRow {
    pub line: usize,
    pub message: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MeasurementSet {
    pub records: Vec<DynoRecord>,
    pub per_phase: Option<PerPhase>,
    pub emf_waveform: Option<EmfWaveform>,
    pub thermal: Option<ThermalMeasurement>,
    /// Rows dropped in lenient mode.
    pub skipped: Vec<SkippedRow>,
}

impl MeasurementSet {
    pub fn validate(&self) -> Result<()> {
        for r in &self.records {
            if ![r.voltage, r.current, r.speed, r.torque].iter().all(|v| v.is_finite()) {
                return Err(Error::invariant("measurements: electrical quantities finite"));
            }
            if r.current < 0.0 {
                return Err(Error::invariant("measurements: currents >= 0"));
            }
        }
        Ok(())
    }
}

/// Column unit suffixes and their factor to SI.
fn unit_factor(quantity: &str, unit: &str) -> Option<f64> {
    let f = match (quantity, unit) {
        ("voltage" | "emf", "V") => 1.0,
        ("voltage" | "emf", "mV") => 1e-3,
        ("current", "A") => 1.0,
        ("current", "mA") => 1e-3,
        ("speed", "rpm") => rpm_to_rad_s(1.0),
        ("speed", "rad_s") => 1.0,
        ("torque", "mNm") => 1e-3,
        ("torque", "Nm") => 1.0,
        ("timestamp" | "time", "s") => 1.0,
        ("timestamp" | "time", "ms") => 1e-3,
        ("resistance", "ohm") => 1.0,
        ("resistance", "mohm") => 1e-3,
        ("inductance", "H") => 1.0,
        ("inductance", "mH") => 1e-3,
        ("inductance", "uH") => 1e-6,
        ("dissipation", "W") => 1.0,
        ("peak_temp" | "ambient", "degC") => 1.0,
        _ => return None,
    };
    Some(f)
}

const QUANTITIES: &[&str] = &[
    "voltage",
    "current",
    "speed",
    "torque",
    "timestamp",
    "time",
    "emf",
    "resistance",
    "inductance",
    "dissipation",
    "peak_temp",
    "ambient",
];

struct Column {
    quantity: &'static str,
    factor: f64,
}

/// Splits `speed_rpm` into (`speed`, factor). Unknown quantity names are
/// rejected, as are names without a recognised unit suffix.
fn parse_column(name: &str, line: usize) -> Result<Column> {
    let name = name.trim();
    for &q in QUANTITIES {
        if name == q {
            return Err(Error::parse(Some(line), Some(name), "unit declaration absent (expected e.g. `voltage_V`)"));
        }
        if let Some(unit) = name.strip_prefix(q).and_then(|r| r.strip_prefix('_')) {
            return match unit_factor(q, unit) {
                Some(factor) => Ok(Column { quantity: q, factor }),
                None => Err(Error::parse(Some(line), Some(name), format!("unit `{unit}` not accepted for {q}"))),
            };
        }
    }
    Err(Error::parse(Some(line), Some(name), "unknown column"))
}

struct Section {
    kind: String,
    attrs: Vec<(String, String)>,
    header_line: usize,
    lines: Vec<(usize, String)>,
}

fn split_sections(text: &str) -> Result<Vec<Section>> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    let first = lines.by_ref().find(|(_, l)| !l.is_empty());
    match first {
        None => return Err(Error::InsufficientData("measurement file is empty".into())),
        Some((_, l)) if l == FORMAT_LINE => {}
        Some((n, l)) => {
            return Err(Error::parse(
                Some(n),
                None,
                format!("expected `{FORMAT_LINE}` as the first line, found `{l}`"),
            ))
        }
    }
    let mut sections: Vec<Section> = Vec::new();
    for (n, l) in lines {
        if l.is_empty() {
            continue;
        }
        if let Some(rest) = l.strip_prefix('#') {
            if let Some(spec) = rest.trim().strip_prefix("section:") {
                let mut words = spec.split_whitespace();
                let kind = words
                    .next()
                    .ok_or_else(|| Error::parse(Some(n), None, "section directive without a name"))?
                    .to_owned();
                let attrs = words
                    .map(|w| {
                        w.split_once('=')
                            .map(|(k, v)| (k.to_owned(), v.to_owned()))
                            .ok_or_else(|| Error::parse(Some(n), None, format!("bad section attribute `{w}`")))
                    })
                    .collect::<Result<_>>()?;
                sections.push(Section {
                    kind,
                    attrs,
                    header_line: 0,
                    lines: Vec::new(),
                });
            }
            continue;
        }
        let s = sections
            .last_mut()
            .ok_or_else(|| Error::parse(Some(n), None, "data before any `# section:` directive"))?;
        if s.header_line == 0 {
            s.header_line = n;
        }
        s.lines.push((n, l.to_owned()));
    }
    Ok(sections)
}

/// A section's CSV body as rows of SI values, plus any text columns.
struct Table {
    columns: Vec<Column>,
    rows: Vec<(usize, Vec<Option<f64>>, Vec<String>)>,
}

fn read_table(section: &Section, text_names: &[&str], lenient: bool, skipped: &mut Vec<SkippedRow>) -> Result<Table> {
    let body: String = section.lines.iter().map(|(_, l)| format!("{l}\n")).collect();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(body.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| Error::parse(Some(section.header_line), None, e.to_string()))?
        .clone();
    let mut columns = Vec::new();
    let mut index = Vec::new();
    for h in headers.iter() {
        if text_names.contains(&h) {
            index.push(None);
        } else {
            index.push(Some(columns.len()));
            columns.push(parse_column(h, section.header_line)?);
        }
    }
    let width = headers.len();
    let mut rows = Vec::new();
    for (k, rec) in reader.records().enumerate() {
        let line = section.lines.get(k + 1).map(|l| l.0).unwrap_or(section.header_line);
        let parsed = (|| -> std::result::Result<(Vec<Option<f64>>, Vec<String>), String> {
            let rec = rec.map_err(|e| e.to_string())?;
            if rec.len() != width {
                return Err(format!("expected {width} fields, found {}", rec.len()));
            }
            let mut values = vec![None; columns.len()];
            let mut texts = Vec::new();
            for (field, slot) in rec.iter().zip(&index) {
                match slot {
                    None => texts.push(field.to_owned()),
                    Some(c) if field.is_empty() => values[*c] = None,
                    Some(c) => {
                        let v: f64 = field.parse().map_err(|_| format!("`{field}` is not a number"))?;
                        if !v.is_finite() {
                            return Err(format!("`{field}` is not finite"));
                        }
                        values[*c] = Some(v * columns[*c].factor);
                    }
                }
            }
            Ok((values, texts))
        })();
        match parsed {
            Ok((v, t)) => rows.push((line, v, t)),
            Err(message) if lenient => skipped.push(SkippedRow { line, message }),
            Err(message) => return Err(Error::parse(Some(line), None, message)),
        }
    }
    Ok(Table { columns, rows })
}

impl Table {
    fn column(&self, quantity: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.quantity == quantity)
    }

    fn require(&self, quantity: &str, section: &Section) -> Result<usize> {
        self.column(quantity).ok_or_else(|| {
            Error::parse(
                Some(section.header_line),
                None,
                format!("section `{}` is missing required column `{quantity}_<unit>`", section.kind),
            )
        })
    }
}

fn required(value: Option<f64>, what: &str, line: usize, lenient: bool, skipped: &mut Vec<SkippedRow>) -> Result<Option<f64>> {
    match value {
        Some(v) => Ok(Some(v)),
        None if lenient => {
            skipped.push(SkippedRow {
                line,
                message: format!("missing {what}"),
            });
            Ok(None)
        }
        None => Err(Error::parse(Some(line), Some(what), "missing value")),
    }
}

pub fn parse_measurements(text: &str, lenient: bool) -> Result<MeasurementSet> {
    let sections = split_sections(text)?;
    let mut set = MeasurementSet::default();
    let mut skipped = Vec::new();
    let mut data_rows = 0;

    for s in &sections {
        if s.lines.is_empty() {
            continue;
        }
        match s.kind.as_str() {
            "dyno" => {
                let t = read_table(s, &[], lenient, &mut skipped)?;
                let (v, i, w, q) = (
                    t.require("voltage", s)?,
                    t.require("current", s)?,
                    t.require("speed", s)?,
                    t.require("torque", s)?,
                );
                let ts = t.column("timestamp");
                'rows: for (line, row, _) in &t.rows {
                    let mut vals = [0.0; 4];
                    for (slot, (col, name)) in [(v, "voltage"), (i, "current"), (w, "speed"), (q, "torque")]
                        .into_iter()
                        .enumerate()
                    {
                        match required(row[col], name, *line, lenient, &mut skipped)? {
                            Some(x) => vals[slot] = x,
                            None => continue 'rows,
                        }
                    }
                    if vals[1] < 0.0 {
                        let message = format!("negative current {}", vals[1]);
                        if lenient {
                            skipped.push(SkippedRow { line: *line, message });
                            continue;
                        }
                        return Err(Error::parse(Some(*line), Some("current"), message));
                    }
                    set.records.push(DynoRecord {
                        voltage: vals[0],
                        current: vals[1],
                        speed: vals[2],
                        torque: vals[3],
                        timestamp: ts.and_then(|c| row[c]),
                    });
                }
                data_rows += t.rows.len();
            }
            "phase" => {
                let t = read_table(s, &["phase"], lenient, &mut skipped)?;
                let r = t.require("resistance", s)?;
                let l = t.column("inductance");
                if t.rows.len() != 3 {
                    return Err(Error::parse(
                        Some(s.header_line),
                        None,
                        format!("phase section needs exactly 3 rows, found {}", t.rows.len()),
                    ));
                }
                let label = |k: usize| {
                    t.rows[k]
                        .2
                        .first()
                        .cloned()
                        .unwrap_or_else(|| ["AB", "BC", "CA"][k].to_owned())
                };
                let value = |k: usize, c: usize, what: &str| {
                    t.rows[k]
                        .1[c]
                        .ok_or_else(|| Error::parse(Some(t.rows[k].0), Some(what), "missing value"))
                };
                let resistances = [value(0, r, "resistance")?, value(1, r, "resistance")?, value(2, r, "resistance")?];
                let inductances = match l {
                    Some(c) => Some([value(0, c, "inductance")?, value(1, c, "inductance")?, value(2, c, "inductance")?]),
                    None => None,
                };
                set.per_phase = Some(PerPhase {
                    labels: [label(0), label(1), label(2)],
                    resistances,
                    inductances,
                });
                data_rows += 3;
            }
            "emf" => {
                let speed_rpm = s
                    .attrs
                    .iter()
                    .find(|(k, _)| k == "speed_rpm")
                    .ok_or_else(|| Error::parse(Some(s.header_line), None, "emf section needs `speed_rpm=` attribute"))?
                    .1
                    .parse::<f64>()
                    .map_err(|_| Error::parse(Some(s.header_line), Some("speed_rpm"), "not a number"))?;
                let t = read_table(s, &[], lenient, &mut skipped)?;
                let (tc, ec) = (t.require("time", s)?, t.require("emf", s)?);
                let mut w = EmfWaveform {
                    speed: rpm_to_rad_s(speed_rpm),
                    time: Vec::new(),
                    emf: Vec::new(),
                };
                for (line, row, _) in &t.rows {
                    let (Some(tt), Some(e)) = (
                        required(row[tc], "time", *line, lenient, &mut skipped)?,
                        required(row[ec], "emf", *line, lenient, &mut skipped)?,
                    ) else {
                        continue;
                    };
                    w.time.push(tt);
                    w.emf.push(e);
                }
                data_rows += w.emf.len();
                set.emf_waveform = Some(w);
            }
            "thermal" => {
                let t = read_table(s, &[], lenient, &mut skipped)?;
                let (d, p) = (t.require("dissipation", s)?, t.require("peak_temp", s)?);
                let a = t.column("ambient");
                let (line, row, _) = t
                    .rows
                    .first()
                    .ok_or_else(|| Error::parse(Some(s.header_line), None, "thermal section has no row"))?;
                set.thermal = Some(ThermalMeasurement {
                    dissipation: row[d].ok_or_else(|| Error::parse(Some(*line), Some("dissipation"), "missing value"))?,
                    peak_temperature: row[p].ok_or_else(|| Error::parse(Some(*line), Some("peak_temp"), "missing value"))?,
                    ambient: a.and_then(|c| row[c]),
                });
                data_rows += 1;
            }
            other => {
                return Err(Error::parse(
                    Some(s.header_line.saturating_sub(1).max(1)),
                    None,
                    format!("unknown section `{other}` (expected dyno, phase, emf or thermal)"),
                ))
            }
        }
    }
    if data_rows == 0 {
        return Err(Error::InsufficientData("measurement file contains no data rows".into()));
    }
    set.skipped = skipped;
    set.validate()?;
    Ok(set)
}

pub fn ingest_measurements(path: impl AsRef<Path>, lenient: bool) -> Result<MeasurementSet> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_measurements(&text, lenient)
}
