use thiserror::Error;

/// Errors raised by the simulation and sorting engines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid offspring distribution: {0}")]
    InvalidDistribution(String),
    #[error("invalid rectangle: {0}")]
    InvalidRectangle(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("duplicate label {0}")]
    DuplicateLabel(f64),
    #[error("duplicate time {0}")]
    DuplicateTime(f64),
    #[error("non-finite value {0}")]
    NonFinite(f64),
    #[error("label {label} is not larger than every existing label (max {max})")]
    LabelNotMaximal { label: f64, max: f64 },
    #[error("event at time {time} arrives before time {last}")]
    OutOfOrder { time: f64, last: f64 },
    #[error("height {height} outside (0, {t_max})")]
    HeightOutOfRange { height: f64, t_max: f64 },
    #[error("atom ({label}, {time}) is not strictly above the boundary")]
    BelowBoundary { label: f64, time: f64 },
    #[error("instance too large for exhaustive search: n = {n} > {max}")]
    TooLarge { n: usize, max: usize },
    #[error("no source in the simulation window")]
    NoSource,
    #[error("malformed record: {0}")]
    MalformedRecord(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;
