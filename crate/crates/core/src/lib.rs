//! Reduced-order design and verification models for PCB-stator axial-flux
//! permanent-magnet micro motors.
//!
//! The crate is organised around one root input, [`model::MotorSpec`], and a
//! chain of analyses that consume it:
//!
//! * [`magnetics`]: lumped magnetic circuit, saturation check, back-EMF.
//! * [`electromech`]: winding resistance, motor constants, performance
//!   curves, stall analysis, torque ripple and cogging orders.
//! * [`thermal`]: axisymmetric finite-volume conduction solver and the
//!   coupled continuous-stall search.
//! * [`explorer`]: constraint evaluation and deterministic design sweeps.
//! * [`bench`]: measurement ingestion, constant fitting, model-vs-measurement
//!   comparison, datasheet and CSV/JSON export.

pub mod bench;
pub mod electromech;
pub mod error;
pub mod explorer;
pub mod magnetics;
pub mod model;
pub mod thermal;
pub mod units;

pub use error::{Error, Result};
pub use model::MotorSpec;
