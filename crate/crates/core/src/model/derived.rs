use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::MotorSpec;
use crate::error::Error;

/// Copper fill factor of one stator's winding window.
///
/// The window is the rectangle spanned by the winding stack height
/// (`total_layers · layer_pitch`) and the radial conductor band. Copper
/// occupies `copper_thickness` of every layer pitch axially and
/// `trace_width / (trace_width + trace_clearance)` of the band in-plane, so
/// the ratio reduces to the product of those two fractions.
pub fn copper_fill_factor(spec: &MotorSpec) -> f64 {
    let w = &spec.winding;
    let band = spec.geometry.radial_build();
    let window = w.stack_height() * band;
    let coverage = w.trace_width / (w.trace_width + w.trace_clearance);
    let copper = f64::from(w.total_layers) * w.copper_thickness * band * coverage;
    copper / window
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VolumeConvention {
    /// Full cylinder of diameter OD and the overall axial length.
    EnvelopeCylinder,
    /// Active annulus times the summed stator axial lengths.
    StatorStackOnly,
}

impl fmt::Display for VolumeConvention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            VolumeConvention::EnvelopeCylinder => "envelope-cylinder",
            VolumeConvention::StatorStackOnly => "stator-stack-only",
        })
    }
}

impl FromStr for VolumeConvention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "envelope-cylinder" => Ok(VolumeConvention::EnvelopeCylinder),
            "stator-stack-only" => Ok(VolumeConvention::StatorStackOnly),
            other => Err(Error::InvalidInput(format!(
                "unknown volume convention `{other}` (expected envelope-cylinder or stator-stack-only)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActiveVolume {
    pub cubic_centimetres: f64,
    pub convention: VolumeConvention,
}

pub fn active_volume(spec: &MotorSpec, convention: VolumeConvention) -> ActiveVolume {
    let g = &spec.geometry;
    let m3 = match convention {
        VolumeConvention::EnvelopeCylinder => PI * g.outer_radius().powi(2) * g.overall_axial_length,
        VolumeConvention::StatorStackOnly => {
            g.annulus_area() * f64::from(g.stator_count) * g.stator_axial_length
        }
    };
    ActiveVolume {
        cubic_centimetres: m3 * 1e6,
        convention,
    }
}
