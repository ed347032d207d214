//! Crate-wide error type.

use thiserror::Error;

/// Errors surfaced by estimators, providers, and the experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("significance level must lie in (0, 1), got {0}")]
    InvalidAlpha(f64),

    #[error("sample {value} outside the declared range [{lo}, {hi}]")]
    SampleOutOfRange { value: f64, lo: f64, hi: f64 },

    #[error("invalid range: lower bound {lo} must be strictly below upper bound {hi}")]
    InvalidRange { lo: f64, hi: f64 },

    #[error("weight {0} is not finite")]
    NonFiniteWeight(f64),

    #[error("weight {weight} exceeds the declared density-ratio bound {bound}")]
    WeightExceedsBound { weight: f64, bound: f64 },

    #[error("density-ratio bound {0} is invalid; it must be finite and at least 1")]
    InvalidRatioBound(f64),

    #[error("all weights are zero; the self-normalized estimator is undefined")]
    AllZeroWeights,

    #[error("invalid grid step {0}; must lie in (0, 1)")]
    InvalidGridStep(f64),

    #[error("invalid alpha split {0}; must lie in (0, 1)")]
    InvalidAlphaSplit(f64),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("labeled density is zero at the queried point; the ratio is undefined")]
    ZeroLabeledDensity,

    #[error("sequence length {got} does not match the {expected}-site space")]
    LengthMismatch { got: usize, expected: usize },

    #[error("symbol {symbol} outside alphabet of size {alphabet}")]
    SymbolOutOfRange { symbol: u8, alphabet: usize },

    #[error("unknown class {0:?}")]
    UnknownClass(String),

    #[error("menu is empty")]
    EmptyMenu,

    #[error("duplicate configuration id {0:?}")]
    DuplicateConfigId(String),

    #[error("no design batch supplied for configuration {0:?}")]
    MissingDesignBatch(String),

    #[error("no labeled samples supplied for configuration {0:?}")]
    MissingLabeledData(String),

    #[error("backend {0} is not a p-value backend; use its dedicated selector")]
    UnsupportedBackend(&'static str),

    #[error("temperature must be positive, got {0}")]
    NonPositiveTemperature(f64),

    #[error("forecast standard deviation must be positive, got {0}")]
    DegenerateForecastSd(f64),

    #[error("sequence space of {0} states exceeds the enumeration cap of {1}")]
    SpaceTooLarge(u128, u64),

    #[error("criterion requires g = identity (Mean); got an exceedance criterion")]
    MeanCriterionRequired,

    #[error("need at least {need} samples, got {got}")]
    TooFewSamples { need: usize, got: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;
