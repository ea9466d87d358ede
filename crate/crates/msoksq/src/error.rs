use thiserror::Error;

/// Errors produced by configuration validation, data loading and training.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("observation {value} not in the alphabet of sensor {sensor}")]
    UnknownObservation { sensor: usize, value: f64 },

    #[error("enumeration too large: |Q| = {size} exceeds cap {cap}")]
    EnumerationOverflow { size: usize, cap: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
