//! Greedy decoding of posterior streams into scored units.
//!
//! A stream is a sequence of probability vectors, one per decode step. The
//! token of each step is recomputed from its distribution (argmax, lowest
//! index on ties); token ids stored alongside the stream are never trusted.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::measures::{confidence, MeasureConfig, ProbDist};
use crate::words::{aggregate, AggKind};

/// Marker prefixed to word-begin wordpieces (`▁he`).
pub const WORD_BEGIN_MARKER: char = '\u{2581}';

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub id: usize,
    pub text: String,
    pub word_begin: bool,
}

/// Output vocabulary, blank included. Token ids are dense `0..size`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocab {
    blank_id: usize,
    tokens: Vec<Token>,
}

impl Vocab {
    /// `tokens` may be given in any order but must cover `0..len` exactly once.
    pub fn new(blank_id: usize, mut tokens: Vec<Token>) -> Result<Self> {
        if tokens.len() < 2 {
            return Err(Error::InvalidVocab(format!(
                "vocabulary needs at least 2 entries, got {}",
                tokens.len()
            )));
        }
        tokens.sort_by_key(|t| t.id);
        for (expected, token) in tokens.iter().enumerate() {
            if token.id != expected {
                return Err(Error::InvalidVocab(format!(
                    "token ids must be dense 0..{}; missing or duplicate id near {}",
                    tokens.len(),
                    expected
                )));
            }
        }
        let Some(blank) = tokens.get(blank_id) else {
            return Err(Error::InvalidVocab(format!(
                "blank_id {blank_id} out of range for size {}",
                tokens.len()
            )));
        };
        if blank.word_begin {
            return Err(Error::InvalidVocab("blank token cannot be word_begin".into()));
        }
        Ok(Self { blank_id, tokens })
    }

    pub fn size(&self) -> usize {
        self.tokens.len()
    }

    pub fn blank_id(&self) -> usize {
        self.blank_id
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    pub fn token(&self, id: usize) -> &Token {
        &self.tokens[id]
    }

    pub fn is_word_begin(&self, id: usize) -> bool {
        self.tokens[id].word_begin
    }

    /// Token text as it appears inside a word: a leading word-begin marker is
    /// dropped from word-begin tokens.
    pub fn surface(&self, id: usize) -> &str {
        let t = &self.tokens[id];
        if t.word_begin {
            t.text.strip_prefix(WORD_BEGIN_MARKER).unwrap_or(&t.text)
        } else {
            &t.text
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DecodeMode {
    /// Repeated argmax tokens merge into one unit; blanks separate repeats.
    Ctc,
    /// Every non-blank step is an emission of its own.
    Rnnt,
}

/// What happens to blank steps during confidence aggregation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum BlankPolicy {
    /// Blank steps are dropped.
    #[default]
    Exclude,
    /// Blank steps count as frames of the next emitted unit; blanks after the
    /// last unit count toward the last unit.
    Include,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmissionStep<'a> {
    pub probs: ProbDist<'a>,
    pub step_index: usize,
}

/// Index of the largest probability, lowest index on ties.
pub fn greedy_argmax(step: &EmissionStep<'_>) -> usize {
    argmax(step.probs.as_slice())
}

fn argmax(probs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &p) in probs.iter().enumerate().skip(1) {
        if p > probs[best] {
            best = i;
        }
    }
    best
}

/// Validates every step against the vocabulary and returns the argmax path.
pub fn argmax_path<S: AsRef<[f64]>>(steps: &[S], vocab: &Vocab) -> Result<Vec<usize>> {
    steps
        .iter()
        .enumerate()
        .map(|(step_index, row)| {
            let row = row.as_ref();
            if row.len() != vocab.size() {
                return Err(Error::StepWidth {
                    step: step_index,
                    expected: vocab.size(),
                    found: row.len(),
                });
            }
            let step = EmissionStep { probs: ProbDist::new(row)?, step_index };
            Ok(greedy_argmax(&step))
        })
        .collect()
}

/// Frames belonging to one emitted unit, before scoring.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Segment {
    pub token_id: usize,
    /// First step whose confidence feeds the unit.
    pub first_step: usize,
    /// Last step (inclusive) whose confidence feeds the unit.
    pub last_step: usize,
}

/// Splits an argmax path into units.
pub fn segment(path: &[usize], blank_id: usize, mode: DecodeMode, blank: BlankPolicy) -> Vec<Segment> {
    let mut segments: Vec<Segment> = Vec::new();
    // First blank step not yet attached to a unit (Include policy).
    let mut pending_blank: Option<usize> = None;
    let mut prev: Option<usize> = None;
    for (i, &token) in path.iter().enumerate() {
        if token == blank_id {
            pending_blank.get_or_insert(i);
            prev = Some(token);
            continue;
        }
        let extends = mode == DecodeMode::Ctc && prev == Some(token);
        if extends {
            // Repeats are contiguous, so the open unit is the last one.
            let last = segments.last_mut().expect("repeat follows an emitted unit");
            last.last_step = i;
        } else {
            let first_step = match (blank, pending_blank) {
                (BlankPolicy::Include, Some(b)) => b,
                _ => i,
            };
            segments.push(Segment { token_id: token, first_step, last_step: i });
        }
        pending_blank = None;
        prev = Some(token);
    }
    if let (BlankPolicy::Include, Some(last)) = (blank, segments.last_mut()) {
        if pending_blank.is_some() {
            last.last_step = path.len() - 1;
        }
    }
    segments
}

/// A collapsed non-blank unit with its confidence.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitScore {
    pub token_id: usize,
    /// Inclusive `(first_step, last_step)`.
    pub frame_span: (usize, usize),
    pub frame_confidences: Vec<f64>,
    pub unit_confidence: f64,
}

/// Per-step confidence under `cfg` for an already validated stream.
pub fn step_confidences<S: AsRef<[f64]>>(steps: &[S], cfg: &MeasureConfig) -> Result<Vec<f64>> {
    steps
        .iter()
        .map(|row| confidence(ProbDist::new(row.as_ref())?, cfg))
        .collect()
}

/// Scores segments from precomputed per-step confidences.
pub fn score_segments(segments: &[Segment], step_conf: &[f64], unit_agg: AggKind) -> Vec<UnitScore> {
    segments
        .iter()
        .map(|s| {
            let frame_confidences = step_conf[s.first_step..=s.last_step].to_vec();
            let unit_confidence =
                aggregate(&frame_confidences, unit_agg).expect("segments are never empty");
            UnitScore {
                token_id: s.token_id,
                frame_span: (s.first_step, s.last_step),
                frame_confidences,
                unit_confidence,
            }
        })
        .collect()
}

/// Greedy collapse of a posterior stream into scored units, excluding blanks.
pub fn collapse_stream<S: AsRef<[f64]>>(
    steps: &[S],
    vocab: &Vocab,
    mode: DecodeMode,
    cfg: &MeasureConfig,
    unit_agg: AggKind,
) -> Result<Vec<UnitScore>> {
    collapse_stream_with(steps, vocab, mode, BlankPolicy::Exclude, cfg, unit_agg)
}

/// [`collapse_stream`] with an explicit blank policy.
pub fn collapse_stream_with<S: AsRef<[f64]>>(
    steps: &[S],
    vocab: &Vocab,
    mode: DecodeMode,
    blank: BlankPolicy,
    cfg: &MeasureConfig,
    unit_agg: AggKind,
) -> Result<Vec<UnitScore>> {
    cfg.validate()?;
    let path = argmax_path(steps, vocab)?;
    let segments = segment(&path, vocab.blank_id(), mode, blank);
    let conf = step_confidences(steps, cfg)?;
    Ok(score_segments(&segments, &conf, unit_agg))
}

/// Greedy transcript: unit surfaces joined, with a space before every
/// word-begin unit except the first.
pub fn transcript(token_ids: impl IntoIterator<Item = usize>, vocab: &Vocab) -> String {
    let mut out = String::new();
    for id in token_ids {
        if vocab.is_word_begin(id) && !out.is_empty() {
            out.push(' ');
        }
        out.push_str(vocab.surface(id));
    }
    out
}
