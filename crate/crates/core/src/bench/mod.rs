//! Measurement ingest, constant fitting and model-vs-measurement reports.

mod compare;
mod datasheet;
mod export;
mod fit;
mod measurements;

pub use compare::{
    compare, compare_datasheets, density_ratio, relative_error, row, ComparisonReport, ComparisonRow,
    DensityRatioReport, ModelOutputs, ReferenceBasis, Tolerances, UnitInconsistency, Verdict,
};
pub use datasheet::{build_datasheet, Datasheet, DatasheetOptions, DatasheetRow, DATASHEET_FORMAT};
pub use export::{atomic_write, curve_csv, waveform_csv};
pub use fit::{fit_constants, FitDiagnostics, FittedConstants, KeSource, ResistanceSource};
pub use measurements::{
    ingest_measurements, parse_measurements, DynoRecord, EmfWaveform, MeasurementSet, PerPhase, SkippedRow,
    ThermalMeasurement, FORMAT_LINE,
};
