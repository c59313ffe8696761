//! Per-frame confidence measures.
//!
//! Every measure maps a probability vector over the vocabulary (blank
//! included) to `[0, 1]`: a uniform vector scores 0 and a one-hot vector
//! scores 1. Entropy-based measures come in two normalizations:
//!
//! * linear: `1 - H(p) / max H`
//! * exponential: `(e^{-H(p)} - e^{-max H}) / (1 - e^{-max H})`
//!
//! Sums over the vocabulary use [`fsum`](crate::fsum), so every measure is
//! exactly invariant under permutation of the probability vector.

use alloc::format;
use alloc::string::String;

use crate::error::{DistributionError, Error, Result};
use crate::math::{exp, expm1, fsum, log, log1p};

/// Tolerance on `|sum(p) - 1|` accepted by [`ProbDist::new`].
pub const SUM_TOLERANCE: f64 = 1e-6;

/// Above this value of the exponential-Tsallis normalizer the ratio is
/// evaluated in log space.
const TSALLIS_EXP_LOG_SPACE: f64 = 30.0;

/// A validated probability vector of length `V >= 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbDist<'a> {
    probs: &'a [f64],
}

impl<'a> ProbDist<'a> {
    /// Checks length, finiteness, non-negativity and the simplex sum.
    /// Inputs are never renormalized.
    pub fn new(probs: &'a [f64]) -> Result<Self, DistributionError> {
        if probs.len() < 2 {
            return Err(DistributionError::TooShort { len: probs.len() });
        }
        for (index, &value) in probs.iter().enumerate() {
            if !value.is_finite() {
                return Err(DistributionError::NonFinite { index });
            }
            if value < 0.0 {
                return Err(DistributionError::Negative { index, value });
            }
        }
        let sum = fsum(probs.iter().copied());
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(DistributionError::Sum { sum });
        }
        Ok(Self { probs })
    }

    pub fn as_slice(&self) -> &'a [f64] {
        self.probs
    }

    /// Vocabulary size `V`.
    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    fn size(&self) -> f64 {
        self.probs.len() as f64
    }

    /// `sum p ln p`, with `0 ln 0 = 0`.
    fn neg_gibbs(&self) -> f64 {
        fsum(self.probs.iter().filter(|&&p| p > 0.0).map(|&p| p * log(p)))
    }

    /// `sum p^alpha - 1`, computed as `sum p (p^(alpha-1) - 1)` to keep
    /// precision when alpha is close to 1.
    fn power_sum_minus_one(&self, alpha: f64) -> f64 {
        fsum(
            self.probs
                .iter()
                .filter(|&&p| p > 0.0)
                .map(|&p| p * expm1((alpha - 1.0) * log(p))),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MeasureKind {
    MaxProb,
    Gibbs,
    Tsallis,
    Renyi,
}

impl MeasureKind {
    pub const ALL: [MeasureKind; 4] = [Self::MaxProb, Self::Gibbs, Self::Tsallis, Self::Renyi];

    pub fn name(self) -> &'static str {
        match self {
            Self::MaxProb => "max_prob",
            Self::Gibbs => "gibbs",
            Self::Tsallis => "tsallis",
            Self::Renyi => "renyi",
        }
    }

    /// Whether the measure takes an entropy index `alpha`.
    pub fn is_parametric(self) -> bool {
        matches!(self, Self::Tsallis | Self::Renyi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Normalization {
    Linear,
    Exponential,
}

impl Normalization {
    pub fn name(self) -> &'static str {
        match self {
            Self::Linear => "lin",
            Self::Exponential => "exp",
        }
    }
}

/// A fully specified confidence measure.
///
/// `alpha` is meaningful only for Tsallis and Rényi; it is stored as 1.0 (and
/// ignored) for the other kinds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasureConfig {
    pub kind: MeasureKind,
    pub normalization: Normalization,
    pub alpha: f64,
}

impl MeasureConfig {
    pub fn new(kind: MeasureKind, normalization: Normalization, alpha: Option<f64>) -> Result<Self> {
        let alpha = if kind.is_parametric() {
            let alpha = alpha.ok_or_else(|| {
                Error::InvalidConfig(format!("measure {} requires alpha", kind.name()))
            })?;
            check_alpha(alpha)?;
            alpha
        } else {
            1.0
        };
        let cfg = Self { kind, normalization, alpha };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn max_prob() -> Self {
        Self { kind: MeasureKind::MaxProb, normalization: Normalization::Linear, alpha: 1.0 }
    }

    pub fn gibbs(normalization: Normalization) -> Self {
        Self { kind: MeasureKind::Gibbs, normalization, alpha: 1.0 }
    }

    pub fn tsallis(normalization: Normalization, alpha: f64) -> Result<Self> {
        Self::new(MeasureKind::Tsallis, normalization, Some(alpha))
    }

    pub fn renyi(normalization: Normalization, alpha: f64) -> Result<Self> {
        Self::new(MeasureKind::Renyi, normalization, Some(alpha))
    }

    pub fn validate(&self) -> Result<()> {
        if self.kind == MeasureKind::MaxProb && self.normalization != Normalization::Linear {
            return Err(Error::UnsupportedMeasure {
                measure: self.kind.name(),
                normalization: self.normalization.name(),
            });
        }
        if self.kind.is_parametric() {
            check_alpha(self.alpha)?;
        }
        Ok(())
    }

    /// Stable identifier such as `tsallis_exp_a0.3333`.
    pub fn label(&self) -> String {
        if self.kind.is_parametric() {
            format!("{}_{}_a{:.4}", self.kind.name(), self.normalization.name(), self.alpha)
        } else {
            format!("{}_{}", self.kind.name(), self.normalization.name())
        }
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha.is_finite() && alpha > 0.0 && alpha != 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidAlpha { alpha })
    }
}

#[inline]
fn clamp01(x: f64) -> f64 {
    x.clamp(0.0, 1.0)
}

/// Normalized maximum probability, `(max p - 1/V) / (1 - 1/V)`.
pub fn confidence_max_prob(p: ProbDist<'_>) -> f64 {
    let max = p.probs.iter().copied().fold(0.0, f64::max);
    let inv = 1.0 / p.size();
    clamp01((max - inv) / (1.0 - inv))
}

/// Linearly normalized Gibbs entropy, `1 + sum p ln p / ln V`.
pub fn confidence_gibbs_lin(p: ProbDist<'_>) -> f64 {
    clamp01(1.0 + p.neg_gibbs() / log(p.size()))
}

/// Exponentially normalized Gibbs entropy, `(V e^{sum p ln p} - 1) / (V - 1)`.
pub fn confidence_gibbs_exp(p: ProbDist<'_>) -> f64 {
    let v = p.size();
    clamp01((v * exp(p.neg_gibbs()) - 1.0) / (v - 1.0))
}

/// Linearly normalized Tsallis entropy,
/// `(V^{1-a} - sum p^a) / (V^{1-a} - 1)`.
pub fn confidence_tsallis_lin(p: ProbDist<'_>, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    // V^{1-a} - 1
    let denom = expm1((1.0 - alpha) * log(p.size()));
    let num = denom - p.power_sum_minus_one(alpha);
    Ok(clamp01(num / denom))
}

/// Linearly normalized Rényi entropy, `1 + log_V(sum p^a) / (a - 1)`.
pub fn confidence_renyi_lin(p: ProbDist<'_>, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let log_sum = log1p(p.power_sum_minus_one(alpha));
    Ok(clamp01(1.0 + log_sum / ((alpha - 1.0) * log(p.size()))))
}

/// Exponentially normalized Tsallis entropy,
/// `(e^{(V^{1-a} - sum p^a)/(1-a)} - 1) / (e^{(V^{1-a} - 1)/(1-a)} - 1)`.
///
/// Both exponents are non-negative for any `a`. When the denominator exponent
/// is large the ratio is evaluated as `e^{A-B} (1 - e^{-A}) / (1 - e^{-B})`,
/// which stays finite for any vocabulary size.
pub fn confidence_tsallis_exp(p: ProbDist<'_>, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let d = expm1((1.0 - alpha) * log(p.size()));
    let a = (d - p.power_sum_minus_one(alpha)) / (1.0 - alpha);
    let b = d / (1.0 - alpha);
    let value = if b > TSALLIS_EXP_LOG_SPACE {
        exp(a - b) * (-expm1(-a)) / (-expm1(-b))
    } else {
        expm1(a) / expm1(b)
    };
    Ok(clamp01(value))
}

/// Exponentially normalized Rényi entropy,
/// `(V (sum p^a)^{1/(a-1)} - 1) / (V - 1)`.
pub fn confidence_renyi_exp(p: ProbDist<'_>, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let v = p.size();
    let powered = exp(log1p(p.power_sum_minus_one(alpha)) / (alpha - 1.0));
    Ok(clamp01((v * powered - 1.0) / (v - 1.0)))
}

/// Dispatches to the measure selected by `cfg`.
pub fn confidence(p: ProbDist<'_>, cfg: &MeasureConfig) -> Result<f64> {
    use MeasureKind::*;
    use Normalization::*;
    match (cfg.kind, cfg.normalization) {
        (MaxProb, Linear) => Ok(confidence_max_prob(p)),
        (MaxProb, Exponential) => Err(Error::UnsupportedMeasure {
            measure: cfg.kind.name(),
            normalization: cfg.normalization.name(),
        }),
        (Gibbs, Linear) => Ok(confidence_gibbs_lin(p)),
        (Gibbs, Exponential) => Ok(confidence_gibbs_exp(p)),
        (Tsallis, Linear) => confidence_tsallis_lin(p, cfg.alpha),
        (Tsallis, Exponential) => confidence_tsallis_exp(p, cfg.alpha),
        (Renyi, Linear) => confidence_renyi_lin(p, cfg.alpha),
        (Renyi, Exponential) => confidence_renyi_exp(p, cfg.alpha),
    }
}
