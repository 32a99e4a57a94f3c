use std::io::Write;
use std::path::Path;

use crate::electromech::PerformanceCurve;
use crate::error::{Error, Result};
use crate::magnetics::Waveform;
use crate::units::{fmt_sig9, rad_s_to_rpm};

/// Writes `bytes` to a temporary file beside `path` and renames it into
/// place, so readers never see a partial file.
pub fn atomic_write(path: impl AsRef<Path>, bytes: &[u8]) -> Result<()> {
    let path = path.as_ref();
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let name = path
        .file_name()
        .ok_or_else(|| Error::InvalidInput(format!("`{}` is not a file path", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    let result = (|| {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        std::fs::rename(&tmp, path)
    })();
    if let Err(e) = result {
        let _ = std::fs::remove_file(&tmp);
        return Err(Error::io(path, e));
    }
    Ok(())
}

fn csv_text(header: &[&str], rows: impl Iterator<Item = Vec<f64>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(r.iter().map(|v| fmt_sig9(*v))).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv")
}

pub fn curve_csv(curve: &PerformanceCurve) -> String {
    csv_text(
        &["torque_mNm", "speed_rpm", "current_A", "input_power_W", "output_power_W", "efficiency"],
        curve.points.iter().map(|p| {
            vec![
                p.torque * 1e3,
                rad_s_to_rpm(p.speed),
                p.current,
                p.input_power,
                p.output_power,
                p.efficiency,
            ]
        }),
    )
}

pub fn waveform_csv(w: &Waveform) -> String {
    csv_text(&["time_s", "emf_V"], w.time.iter().zip(&w.emf).map(|(t, e)| vec![*t, *e]))
}
