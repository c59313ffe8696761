//! Per-utterance scoring: decode, group into words, align and label, for a
//! whole sweep of configurations at once.
//!
//! The argmax path, word surfaces and alignment do not depend on the measure
//! or aggregation, so they are computed once per utterance. Per-step
//! confidences are computed once per distinct measure.

use alloc::string::String;
use alloc::vec::Vec;

use crate::align::{align, label_words, normalize_words, AlignmentSummary, LabeledScore};
use crate::decode::{argmax_path, score_segments, segment, step_confidences, BlankPolicy, DecodeMode, Vocab};
use crate::error::Result;
use crate::measures::MeasureConfig;
use crate::words::{build_words, AggKind};

/// One (measure, aggregation) pair. The aggregation is applied both from
/// frames to units and from units to words.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoringConfig {
    pub measure: MeasureConfig,
    pub agg: AggKind,
}

impl ScoringConfig {
    pub fn label(&self) -> String {
        let mut s = self.measure.label();
        s.push('_');
        s.push_str(self.agg.name());
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PipelineOptions {
    pub mode: DecodeMode,
    pub blank: BlankPolicy,
    /// Lowercase hypothesis and reference words before alignment.
    pub lowercase: bool,
}

impl PipelineOptions {
    pub fn new(mode: DecodeMode) -> Self {
        Self { mode, blank: BlankPolicy::Exclude, lowercase: true }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UtteranceResult {
    pub summary: AlignmentSummary,
    /// Labeled words, one list per configuration in input order.
    pub labeled: Vec<Vec<LabeledScore>>,
    /// Words opened without a word-begin marker.
    pub implicit_heads: usize,
}

/// Scores one utterance under every configuration.
///
/// `reference` is the raw reference text; it is normalized with the same rule
/// as the hypothesis words.
pub fn score_utterance<S: AsRef<[f64]>>(
    utterance_id: &str,
    steps: &[S],
    vocab: &Vocab,
    reference: &str,
    duration_seconds: Option<f64>,
    opts: &PipelineOptions,
    configs: &[ScoringConfig],
) -> Result<UtteranceResult> {
    for c in configs {
        c.measure.validate()?;
    }
    let path = argmax_path(steps, vocab)?;
    let segments = segment(&path, vocab.blank_id(), opts.mode, opts.blank);

    // Surfaces are independent of the scores; use a throwaway scoring pass.
    let zeros = alloc::vec![0.0; steps.len()];
    let shape = build_words(&score_segments(&segments, &zeros, AggKind::Min), vocab, AggKind::Min);
    let hyp: Vec<String> = shape
        .words
        .iter()
        .flat_map(|w| normalize_words(&w.surface, opts.lowercase))
        .collect();
    let reference = normalize_words(reference, opts.lowercase);
    let script = align(&hyp, &reference);
    let mut summary = AlignmentSummary::from_script(&script);
    summary.duration_seconds = duration_seconds;

    let mut labeled = Vec::with_capacity(configs.len());
    let mut cached: Option<(MeasureConfig, Vec<f64>)> = None;
    for c in configs {
        let conf = match &cached {
            Some((m, conf)) if *m == c.measure => conf,
            _ => {
                let conf = step_confidences(steps, &c.measure)?;
                &cached.insert((c.measure, conf)).1
            }
        };
        let units = score_segments(&segments, conf, c.agg);
        let mut words = build_words(&units, vocab, c.agg).words;
        for (w, h) in words.iter_mut().zip(&hyp) {
            w.surface.clone_from(h);
        }
        labeled.push(label_words(utterance_id, &words, &script)?);
    }
    Ok(UtteranceResult { summary, labeled, implicit_heads: shape.implicit_heads })
}

/// Default sweep: max-probability, Gibbs (both normalizations), Tsallis and
/// Rényi (both normalizations, alpha in {1/4, 1/3, 1/2}), each with mean, min
/// and product aggregation.
pub fn default_sweep() -> Vec<ScoringConfig> {
    use crate::measures::Normalization::{Exponential, Linear};
    let mut measures = alloc::vec![
        MeasureConfig::max_prob(),
        MeasureConfig::gibbs(Linear),
        MeasureConfig::gibbs(Exponential)
    ];
    for make in [MeasureConfig::tsallis, MeasureConfig::renyi] {
        for norm in [Linear, Exponential] {
            for alpha in DEFAULT_ALPHAS {
                measures.push(make(norm, alpha).expect("valid alpha"));
            }
        }
    }
    measures
        .into_iter()
        .flat_map(|measure| AggKind::ALL.into_iter().map(move |agg| ScoringConfig { measure, agg }))
        .collect()
}

pub const DEFAULT_ALPHAS: [f64; 3] = [0.25, 1.0 / 3.0, 0.5];

/// Exponential Tsallis, alpha = 1/3, minimum aggregation.
pub fn recommended() -> ScoringConfig {
    ScoringConfig {
        measure: MeasureConfig::tsallis(crate::measures::Normalization::Exponential, 1.0 / 3.0)
            .expect("valid alpha"),
        agg: AggKind::Min,
    }
}
