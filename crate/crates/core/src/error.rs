use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed input text. `line` is 1-based when known.
    #[error("parse error{}{}: {message}", .line.map(|l| format!(" at line {l}")).unwrap_or_default(), .field.as_ref().map(|f| format!(" in `{f}`")).unwrap_or_default())]
    Parse {
        line: Option<usize>,
        field: Option<String>,
        message: String,
    },

    /// A value parsed fine but breaks a documented rule.
    #[error("invariant violated: {rule}")]
    Invariant { rule: String },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("solver did not converge after {iterations} iterations (relative residual {residual:.3e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("coupled iteration did not converge; bracket [{low:.6}, {high:.6}]")]
    CouplingNonConvergence { low: f64, high: f64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("no overlapping quantities between model and measurement")]
    NoOverlap,

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invariant(rule: impl Into<String>) -> Self {
        Error::Invariant { rule: rule.into() }
    }

    pub(crate) fn parse(line: Option<usize>, field: Option<&str>, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            field: field.map(str::to_owned),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
