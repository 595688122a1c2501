//! Error types shared across the pricing, calibration and I/O layers.

use thiserror::Error;

/// Failures raised by the pricers and characteristic functions.
#[derive(Error, Debug, Clone, PartialEq)]
pub enum PricingError {
    #[error("domain error: {0}")]
    Domain(String),

    /// The Merton series did not reach its tail bound before the hard cap.
    #[error("Merton series tail bound not met by k = {k_max}")]
    SeriesTruncation { k_max: usize },

    #[error("log-strike {log_strike} outside truncation range [{a}, {b}]")]
    OutOfRange { log_strike: f64, a: f64, b: f64 },

    #[error("degenerate truncation range (zero variance and zero tail weight)")]
    DegenerateRange,

    #[error("numerical instability: {0}")]
    NumericalInstability(String),
}

/// A parameter that lies outside its admissible box.
#[derive(Error, Debug, Clone, PartialEq)]
#[error("parameter {name} = {value} outside {interval}")]
pub struct ParamError {
    pub name: &'static str,
    pub value: f64,
    pub interval: String,
}

impl From<ParamError> for PricingError {
    fn from(e: ParamError) -> Self {
        PricingError::Domain(e.to_string())
    }
}

#[derive(Error, Debug, Clone, PartialEq)]
pub enum CalibrationError {
    #[error("insufficient quotes: {available} available, {required} required")]
    InsufficientQuotes { available: usize, required: usize },

    #[error("every start hit a rejected parameter region")]
    AllStartsFailed,

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("quotes in one calibration slice must share a maturity")]
    MixedMaturities,

    #[error(transparent)]
    Pricing(#[from] PricingError),
}

#[derive(Error, Debug, Clone, PartialEq)]
pub enum McError {
    #[error("invalid Monte Carlo configuration: {0}")]
    InvalidConfig(String),

    #[error("random substreams exhausted: {0}")]
    StreamExhausted(String),

    #[error("invalid model parameters: {0}")]
    InvalidParams(String),
}

#[derive(Error, Debug, Clone, PartialEq)]
pub enum MetricsError {
    #[error("length mismatch: {observed} observed vs {predicted} predicted")]
    LengthMismatch { observed: usize, predicted: usize },

    #[error("no observations")]
    Empty,
}

/// Data ingestion and persistence failures.
#[derive(Error, Debug)]
pub enum IoError {
    #[error("missing column `{0}`")]
    MissingColumn(String),

    #[error("cannot parse row {line}: {reason}")]
    RowParse { line: usize, reason: String },

    #[error("row {0} disagrees with the file's futures_price/rate")]
    InconsistentContext(usize),

    #[error("file contains no quotes")]
    EmptyFile,

    #[error("invalid chain: {0}")]
    InvalidChain(String),

    #[error("params record does not match model {model}: {reason}")]
    ParamsMismatch { model: String, reason: String },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
