use num_complex::Complex64;
use thiserror::Error;

use crate::edge::RegularityReport;



#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("solver failed at z = {z} after {iterations} iterations (last residual {residual:e})")]
    SolverFailure {
        z: Complex64,
        iterations: usize,
        residual: f64,
    },

    #[error("vanishing denominator in {context} at index {index}")]
    Pole { context: &'static str, index: usize },

    #[error("no edge found: {reason} (scanned x in [{lo}, {hi}])")]
    EdgeNotFound { lo: f64, hi: f64, reason: String },

    #[error("degenerate edge: {0}")]
    Degenerate(String),

    #[error("regularity violation: {0}")]
    RegularityViolation(String),

    #[error("campaign refused, regularity check failed: {0:?}")]
    Refused(Box<RegularityReport>),

    #[error("Painleve integration blew up at s = {at}")]
    IntegrationFailure { at: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error("unknown config keys: {}", .0.join(", "))]
    UnknownKeys(Vec<String>),

    #[error("grid point E = {energy}: {source}")]
    AtGridPoint {
        energy: f64,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
