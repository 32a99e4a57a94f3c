use std::path::{Path, PathBuf};
use std::process::ExitCode;

use afpm_core::bench::{
    atomic_write, build_datasheet, compare, compare_datasheets, curve_csv, density_ratio, ingest_measurements,
    ComparisonReport, Datasheet, DatasheetOptions, ModelOutputs, Tolerances,
};
use afpm_core::electromech::{build_constants, performance_curve, LossModel, REFERENCE_TEMPERATURE};
use afpm_core::explorer::{
    coarse_fine_delta, parse_parameter_value, sweep, sweep_csv, Axis, ConstraintSet, DEFAULT_CANDIDATE_CAP,
};
use afpm_core::magnetics::{flux_linkage_constant, solve_magnetic_circuit};
use afpm_core::model::{active_volume, load_spec, serialize_spec, MotorSpec, VolumeConvention};
use afpm_core::thermal::{field_csv, stall_case, summarize, Resolution, DEFAULT_RESOLUTION};
use afpm_core::units::fmt_sig9;
use afpm_core::Error;
use clap::{Args, Parser, Subcommand, ValueEnum};

const EXIT_VALIDATION: u8 = 3;
const EXIT_NON_CONVERGENCE: u8 = 4;
const EXIT_COMPARISON: u8 = 5;

/// Design and verification tool for PCB-stator axial-flux motors.
#[derive(Parser)]
#[command(name = "afpm", version, arg_required_else_help = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct SpecArg {
    /// Motor spec file.
    #[arg(value_name = "SPEC", required_unless_present = "spec")]
    spec_path: Option<PathBuf>,
    #[arg(long, value_name = "PATH", conflicts_with = "spec_path")]
    spec: Option<PathBuf>,
}

impl SpecArg {
    fn load(&self) -> Result<MotorSpec, Failure> {
        let path = self.spec.as_ref().or(self.spec_path.as_ref()).expect("clap enforces one of them");
        Ok(load_spec(path)?)
    }
}

#[derive(Args)]
struct OutArgs {
    /// Directory for written artifacts; stdout when omitted.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Subcommand)]
enum Command {
    /// Derived datasheet with published reference values alongside.
    Analyze {
        #[command(flatten)]
        spec: SpecArg,
        #[command(flatten)]
        out: OutArgs,
        /// Supply voltage for the stall rows.
        #[arg(long)]
        voltage: Option<f64>,
        #[arg(long, value_parser = parse_resolution)]
        resolution: Option<Resolution>,
    },
    /// Speed, current, power and efficiency against torque.
    Curves {
        #[command(flatten)]
        spec: SpecArg,
        #[command(flatten)]
        out: OutArgs,
        #[arg(long, default_value_t = 48.0)]
        voltage: f64,
        #[arg(long, default_value_t = 0.25)]
        duty: f64,
        #[arg(long, default_value_t = 101)]
        points: usize,
    },
    /// Steady stall-case temperature field and summary.
    Thermal {
        #[command(flatten)]
        spec: SpecArg,
        #[command(flatten)]
        out: OutArgs,
        /// Winding dissipation, W (default: the spec's stall dissipation).
        #[arg(long)]
        power: Option<f64>,
        #[arg(long, value_parser = parse_resolution)]
        resolution: Option<Resolution>,
    },
    /// Full-factorial design sweep ranked by stall torque density.
    Sweep {
        #[command(flatten)]
        spec: SpecArg,
        #[command(flatten)]
        out: OutArgs,
        /// `name=start:stop:steps`, e.g. `winding.trace_width=0.30mm:0.42mm:3`.
        #[arg(long = "axis", value_name = "AXIS")]
        axes: Vec<String>,
        /// Thermal grid for the constraint check.
        #[arg(long, value_parser = parse_resolution)]
        resolution: Option<Resolution>,
        /// Number of top candidates written as spec files with --out.
        #[arg(long, default_value_t = 3)]
        top: usize,
    },
    /// Model versus measurement (CSV) or datasheet versus datasheet (JSON).
    Compare {
        /// Measurement CSV or datasheet JSON.
        measured: PathBuf,
        #[arg(long, value_name = "PATH")]
        spec: PathBuf,
        #[command(flatten)]
        out: OutArgs,
        /// Relative tolerance in percent for every row.
        #[arg(long, value_name = "PCT")]
        tolerance: Option<f64>,
        /// Skip malformed measurement rows instead of failing.
        #[arg(long)]
        lenient: bool,
    },
    /// Datasheet as JSON.
    Datasheet {
        #[command(flatten)]
        spec: SpecArg,
        #[command(flatten)]
        out: OutArgs,
        #[arg(long)]
        voltage: Option<f64>,
        #[arg(long, value_parser = parse_resolution)]
        resolution: Option<Resolution>,
    },
}

fn parse_resolution(s: &str) -> Result<Resolution, String> {
    let (a, b) = s.split_once(['x', 'X']).ok_or("expected NRxNZ, e.g. 128x128")?;
    let nr = a.trim().parse().map_err(|_| format!("bad nr `{a}`"))?;
    let nz = b.trim().parse().map_err(|_| format!("bad nz `{b}`"))?;
    Ok(Resolution::new(nr, nz))
}

/// Accepts `0.30mm` as well as `0.30 mm`.
fn parameter_value(name: &str, text: &str) -> Result<f64, Error> {
    parse_parameter_value(name, text).or_else(|e| {
        let split = text
            .char_indices()
            .map(|(k, _)| k)
            .chain([text.len()])
            .filter(|&k| text[..k].parse::<f64>().is_ok())
            .last();
        match split {
            Some(k) if k < text.len() => parse_parameter_value(name, &format!("{} {}", &text[..k], &text[k..])),
            _ => Err(e),
        }
    })
}

fn parse_axis(s: &str) -> Result<Axis, Error> {
    let bad = || Error::InvalidInput(format!("axis `{s}` is not name=start:stop:steps"));
    let (name, range) = s.split_once('=').ok_or_else(bad)?;
    let parts: Vec<&str> = range.split(':').collect();
    let [start, stop, steps] = parts[..] else {
        return Err(bad());
    };
    Ok(Axis {
        parameter: name.trim().to_owned(),
        start: parameter_value(name.trim(), start)?,
        stop: parameter_value(name.trim(), stop)?,
        steps: steps.trim().parse().map_err(|_| bad())?,
    })
}

enum Failure {
    Model(Error),
    Comparison(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Model(e)
    }
}

fn error_kind(e: &Error) -> (&'static str, u8) {
    match e {
        Error::Parse { .. } => ("parse", EXIT_VALIDATION),
        Error::Invariant { .. } => ("invariant", EXIT_VALIDATION),
        Error::InvalidInput(_) => ("invalid-input", EXIT_VALIDATION),
        Error::InsufficientData(_) => ("insufficient-data", EXIT_VALIDATION),
        Error::NoOverlap => ("no-overlap", EXIT_VALIDATION),
        Error::Io { .. } => ("io", EXIT_VALIDATION),
        Error::NonConvergence { .. } => ("non-convergence", EXIT_NON_CONVERGENCE),
        Error::CouplingNonConvergence { .. } => ("coupling-non-convergence", EXIT_NON_CONVERGENCE),
    }
}

fn write_out(dir: &Path, name: &str, text: &str) -> Result<(), Failure> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.to_owned(),
        source: e,
    })?;
    atomic_write(dir.join(name), text.as_bytes())?;
    Ok(())
}

fn json<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("serializable") + "\n"
}

fn datasheet_text(d: &Datasheet) -> String {
    let mut s = format!("{}\n", d.motor);
    s.push_str(&format!("{:<46} {:>14} {:>12}  {}\n", "quantity", "model", "reference", "condition"));
    for r in &d.rows {
        let reference = r.reference.map(fmt_sig9).unwrap_or_else(|| "-".into());
        let mut line = format!("{:<46} {:>14} {:>12}  {}", r.name, fmt_sig9(r.value), reference, r.condition);
        if let Some(n) = &r.note {
            line.push_str(&format!(" [{n}]"));
        }
        s.push_str(line.trim_end());
        s.push('\n');
    }
    s
}

fn report_text(r: &ComparisonReport) -> String {
    let mut s = format!(
        "{:<30} {:>12} {:>12} {:>9} {:>7}  {:<12} {}\n",
        "quantity", "model", "measured", "error_%", "tol_%", "basis", "verdict"
    );
    for row in &r.rows {
        s.push_str(&format!(
            "{:<30} {:>12} {:>12} {:>9} {:>7}  {:<12} {}\n",
            format!("{} ({})", row.quantity, row.unit),
            fmt_sig9(row.model_value),
            fmt_sig9(row.measured_value),
            format!("{:.2}", row.relative_error * 100.0),
            format!("{:.2}", row.tolerance * 100.0),
            serde_json::to_value(row.basis).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default(),
            serde_json::to_value(row.verdict).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default(),
        ));
    }
    s.push_str(&format!("overall: {}\n", if r.pass { "pass" } else { "fail" }));
    s
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Analyze {
            spec,
            out,
            voltage,
            resolution,
        } => {
            let spec = spec.load()?;
            let opts = DatasheetOptions {
                stall_voltage: voltage,
                resolution: resolution.unwrap_or(DEFAULT_RESOLUTION),
                ..DatasheetOptions::default()
            };
            let d = build_datasheet(&spec, &opts)?;
            let kt = d.get("torque_constant").expect("datasheet has kt");
            let mut text = datasheet_text(&d);
            text.push_str(&format!("kt = {} mNm/A (model)\n", fmt_sig9(kt.value)));
            if let Some(r) = kt.reference {
                text.push_str(&format!("kt = {r:.1} mNm/A (reference)\n"));
            }
            match (&out.out, out.format) {
                (Some(dir), _) => {
                    write_out(dir, "datasheet.json", &d.to_json())?;
                    write_out(dir, "datasheet.txt", &text)?;
                }
                (None, Some(Format::Json)) => print!("{}", d.to_json()),
                (None, _) => print!("{text}"),
            }
        }
        Command::Datasheet {
            spec,
            out,
            voltage,
            resolution,
        } => {
            let spec = spec.load()?;
            let opts = DatasheetOptions {
                stall_voltage: voltage,
                resolution: resolution.unwrap_or(DEFAULT_RESOLUTION),
                ..DatasheetOptions::default()
            };
            let d = build_datasheet(&spec, &opts)?;
            match &out.out {
                Some(dir) => write_out(dir, "datasheet.json", &d.to_json())?,
                None => print!("{}", d.to_json()),
            }
        }
        Command::Curves {
            spec,
            out,
            voltage,
            duty,
            points,
        } => {
            let spec = spec.load()?;
            let circuit = solve_magnetic_circuit(&spec)?;
            let emf = flux_linkage_constant(&spec, &circuit)?;
            let c = build_constants(&spec, &emf, REFERENCE_TEMPERATURE)?;
            let loss = LossModel {
                friction_torque: spec.electrical.friction_torque,
                fixed_loss: spec.electrical.fixed_loss,
            };
            let curve = performance_curve(&c, voltage, duty, loss, points)?;
            let (name, text) = match out.format {
                Some(Format::Json) => ("curves.json", json(&curve)),
                _ => ("curves.csv", curve_csv(&curve)),
            };
            match &out.out {
                Some(dir) => write_out(dir, name, &text)?,
                None => print!("{text}"),
            }
        }
        Command::Thermal {
            spec,
            out,
            power,
            resolution,
        } => {
            let spec = spec.load()?;
            let power = power.unwrap_or(spec.thermal.stall_dissipation);
            let (grid, field) = stall_case(&spec, resolution.unwrap_or(DEFAULT_RESOLUTION), power)?;
            let summary = summarize(&spec, &grid, &field);
            match &out.out {
                Some(dir) => {
                    write_out(dir, "thermal_field.csv", &field_csv(&grid, &field))?;
                    write_out(dir, "thermal_summary.json", &json(&summary))?;
                }
                None => match out.format {
                    Some(Format::Csv) => print!("{}", field_csv(&grid, &field)),
                    Some(Format::Json) => print!("{}", json(&summary)),
                    None => {
                        println!("source power:        {} W", fmt_sig9(summary.source_power_w));
                        println!("ambient:             {} degC", fmt_sig9(summary.ambient_c));
                        println!(
                            "peak temperature:    {:.2} degC at r = {:.3} mm, z = {:.3} mm",
                            summary.peak_temperature_c, summary.peak_location_mm.0, summary.peak_location_mm.1
                        );
                        println!(
                            "insulation margin:   {:.2} K (rating {} degC)",
                            summary.insulation_margin_k, summary.insulation_rating_c
                        );
                        println!(
                            "magnet margin:       {:.2} K (rating {} degC)",
                            summary.magnet_margin_k, summary.magnet_rating_c
                        );
                        println!("energy imbalance:    {:.3e}", summary.energy_imbalance);
                        println!(
                            "solver:              {}x{} cells, {} iterations, residual {:.3e}",
                            summary.resolution.0, summary.resolution.1, summary.iterations, summary.residual_norm
                        );
                    }
                },
            }
        }
        Command::Sweep {
            spec,
            out,
            axes,
            resolution,
            top,
        } => {
            let spec = spec.load()?;
            let axes = axes.iter().map(|a| parse_axis(a)).collect::<Result<Vec<_>, _>>()?;
            let mut constraints = ConstraintSet::default();
            if let Some(r) = resolution {
                constraints.thermal_resolution = r;
            }
            let result = sweep(&spec, &axes, &constraints, DEFAULT_CANDIDATE_CAP)?;
            let delta = coarse_fine_delta(&spec, &constraints, DEFAULT_RESOLUTION)?;
            let csv = sweep_csv(&result);
            eprintln!(
                "{} candidates, {} feasible; coarse-vs-fine peak temperature delta on the base spec: {:+.3} K",
                result.len(),
                result.feasible.len(),
                delta
            );
            match &out.out {
                Some(dir) => {
                    write_out(dir, "sweep.csv", &csv)?;
                    write_out(dir, "sweep.json", &json(&result))?;
                    for (k, c) in result.feasible.iter().take(top).enumerate() {
                        write_out(dir, &format!("candidate_{:02}.spec", k + 1), &serialize_spec(&c.spec))?;
                    }
                }
                None => match out.format {
                    Some(Format::Json) => print!("{}", json(&result)),
                    _ => print!("{csv}"),
                },
            }
        }
        Command::Compare {
            measured,
            spec,
            out,
            tolerance,
            lenient,
        } => {
            let spec = load_spec(&spec)?;
            let tol = tolerance.map(|p| p / 100.0);
            let is_json = measured.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
            let report = if is_json {
                let theirs = Datasheet::load(&measured)?;
                let ours = build_datasheet(&spec, &DatasheetOptions::default())?;
                compare_datasheets(&ours, &theirs, tol.unwrap_or(0.05))?
            } else {
                let data = ingest_measurements(&measured, lenient)?;
                for s in &data.skipped {
                    eprintln!("skipped line {}: {}", s.line, s.message);
                }
                let model = ModelOutputs::from_spec(&spec)?;
                compare(&model, &data, &tol.map(Tolerances::uniform).unwrap_or_default())?
            };
            let density = density_inputs(&spec)
                .map(|(o, t, claimed, published)| density_ratio(o, t, claimed, tol.unwrap_or(0.05), published))
                .transpose()?;
            let mut text = report_text(&report);
            if let Some(d) = &density {
                text.push_str(&format!(
                    "stall torque density ratio: {} vs claimed {} ({:.2}% error, {})\n",
                    fmt_sig9(d.ratio),
                    fmt_sig9(d.claimed_ratio),
                    d.relative_error * 100.0,
                    if d.pass { "pass" } else { "fail" }
                ));
                if let Some(u) = &d.unit_inconsistent {
                    text.push_str(&format!(
                        "published absolute density {} {} is unit-inconsistent: torque/volume gives {} {} (x{:.0})\n",
                        fmt_sig9(u.published),
                        u.published_unit,
                        fmt_sig9(u.computed_in_published_unit),
                        u.published_unit,
                        u.factor
                    ));
                }
            }
            let payload = serde_json::json!({ "report": report, "density_ratio": density });
            match (&out.out, out.format) {
                (Some(dir), _) => {
                    write_out(dir, "comparison.json", &json(&payload))?;
                    write_out(dir, "comparison.txt", &text)?;
                }
                (None, Some(Format::Json)) => print!("{}", json(&payload)),
                (None, _) => print!("{text}"),
            }
            if !report.pass {
                return Err(Failure::Comparison("one or more quantities exceed tolerance".into()));
            }
        }
    }
    Ok(())
}

/// Density-ratio inputs from the spec's reference table: our published stall
/// torque and envelope volume, the other motor's stall torque and volume
/// (from the stated volume ratio), the claimed ratio and the published
/// absolute density.
type DensityInputs = ((f64, f64), (f64, f64), f64, Option<f64>);

fn density_inputs(spec: &MotorSpec) -> Option<DensityInputs> {
    let r = &spec.reference;
    let ours_t = *r.get("stall_torque_mNm")?;
    let other_t = *r.get("comparison_stall_torque_mNm")?;
    let volume_ratio = *r.get("comparison_volume_ratio")?;
    let claimed = *r.get("comparison_density_ratio")?;
    let ours_v = active_volume(spec, VolumeConvention::EnvelopeCylinder).cubic_centimetres;
    Some((
        (ours_t, ours_v),
        (other_t, ours_v / volume_ratio),
        claimed,
        r.get("stall_torque_density_Nm_per_cm3").copied(),
    ))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Model(e)) => {
            let (kind, code) = error_kind(&e);
            eprintln!("{}", serde_json::json!({ "error": kind, "message": e.to_string(), "exit_code": code }));
            ExitCode::from(code)
        }
        Err(Failure::Comparison(msg)) => {
            eprintln!(
                "{}",
                serde_json::json!({ "error": "comparison-failed", "message": msg, "exit_code": EXIT_COMPARISON })
            );
            ExitCode::from(EXIT_COMPARISON)
        }
    }
}
