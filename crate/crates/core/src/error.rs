//! Error type shared by every module of the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain on which the operation is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// A numerical routine could not meet its tolerances.
    #[error("numerical error: {0}")]
    Numerical(String),

    /// A brute-force routine would exceed its configured work budget.
    #[error("budget exceeded: {0}")]
    Budget(String),

    /// The cutting-plane loop hit its iteration cap before closing the gap.
    #[error("iteration limit reached after {iterations} iterations (gap {gap:.3e})")]
    IterationLimit { iterations: usize, gap: f64 },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
