use alloc::string::String;
use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Which probability-vector invariant was violated.
#[derive(Debug, Clone, PartialEq)]
pub enum DistributionError {
    /// Fewer than two entries.
    TooShort { len: usize },
    NonFinite { index: usize },
    Negative { index: usize, value: f64 },
    /// Sum outside `1 ± 1e-6`.
    Sum { sum: f64 },
}

impl fmt::Display for DistributionError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::TooShort { len } => write!(f, "distribution has {len} entries, need at least 2"),
            Self::NonFinite { index } => write!(f, "entry {index} is not finite"),
            Self::Negative { index, value } => write!(f, "entry {index} is negative ({value})"),
            Self::Sum { sum } => write!(f, "entries sum to {sum}, expected 1 within 1e-6"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    InvalidDistribution(DistributionError),
    /// `alpha` must be positive and different from 1.
    InvalidAlpha { alpha: f64 },
    /// The (kind, normalization) pair has no definition.
    UnsupportedMeasure { measure: &'static str, normalization: &'static str },
    /// A decode step does not have one probability per vocabulary entry.
    StepWidth { step: usize, expected: usize, found: usize },
    InvalidVocab(String),
    EmptyAggregation,
    /// The edit script does not consume exactly the hypothesis words.
    ScriptMismatch { words: usize, script_hyp: usize },
    /// The metric is undefined for the given label mix.
    UndefinedMetric { metric: &'static str, reason: &'static str },
    InvalidConfig(String),
    /// Exponential-time oracle called on inputs that are too long.
    OracleGuard { max: usize, found: usize },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::InvalidDistribution(e) => write!(f, "invalid distribution: {e}"),
            Self::InvalidAlpha { alpha } if *alpha == 1.0 => {
                write!(f, "alpha = 1 is the Gibbs limit; use the Gibbs measure instead")
            }
            Self::InvalidAlpha { alpha } => write!(f, "alpha must be > 0 and != 1, got {alpha}"),
            Self::UnsupportedMeasure { measure, normalization } => {
                write!(f, "measure {measure} does not support {normalization} normalization")
            }
            Self::StepWidth { step, expected, found } => {
                write!(f, "step {step} has {found} probabilities, vocabulary has {expected}")
            }
            Self::InvalidVocab(msg) => write!(f, "invalid vocabulary: {msg}"),
            Self::EmptyAggregation => write!(f, "cannot aggregate an empty list"),
            Self::ScriptMismatch { words, script_hyp } => write!(
                f,
                "edit script covers {script_hyp} hypothesis words but {words} were given"
            ),
            Self::UndefinedMetric { metric, reason } => write!(f, "{metric} is undefined: {reason}"),
            Self::InvalidConfig(msg) => write!(f, "invalid configuration: {msg}"),
            Self::OracleGuard { max, found } => {
                write!(f, "oracle input length {found} exceeds the limit of {max}")
            }
        }
    }
}

impl core::error::Error for Error {}

impl From<DistributionError> for Error {
    fn from(e: DistributionError) -> Self {
        Self::InvalidDistribution(e)
    }
}
