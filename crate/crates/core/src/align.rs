//! Word alignment against references and correctness labeling.
//!
//! Deleted reference words carry no confidence, so they are counted in the
//! [`AlignmentSummary`] but never produce a [`LabeledScore`].

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::words::WordScore;

/// One step of an edit script. Indices point into the hypothesis and reference
/// sequences.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EditOp {
    Match { hyp: usize, reference: usize },
    Substitution { hyp: usize, reference: usize },
    Insertion { hyp: usize },
    Deletion { reference: usize },
}

impl EditOp {
    pub fn hyp_index(&self) -> Option<usize> {
        match *self {
            Self::Match { hyp, .. } | Self::Substitution { hyp, .. } | Self::Insertion { hyp } => Some(hyp),
            Self::Deletion { .. } => None,
        }
    }

    pub fn cost(&self) -> usize {
        usize::from(!matches!(self, Self::Match { .. }))
    }
}

/// Minimum edit-distance alignment with unit costs.
///
/// The backtrace runs from the end and prefers match, then substitution, then
/// insertion, then deletion, so equal inputs always give the same script.
pub fn align<T: PartialEq>(hyp: &[T], reference: &[T]) -> Vec<EditOp> {
    let (n, m) = (hyp.len(), reference.len());
    let w = m + 1;
    let mut d = vec![0usize; (n + 1) * w];
    for (j, x) in d.iter_mut().take(w).enumerate() {
        *x = j;
    }
    for i in 1..=n {
        d[i * w] = i;
        for j in 1..=m {
            let diag = d[(i - 1) * w + j - 1] + usize::from(hyp[i - 1] != reference[j - 1]);
            let ins = d[(i - 1) * w + j] + 1;
            let del = d[i * w + j - 1] + 1;
            d[i * w + j] = diag.min(ins).min(del);
        }
    }

    let mut script = Vec::with_capacity(n.max(m));
    let (mut i, mut j) = (n, m);
    while i > 0 || j > 0 {
        let here = d[i * w + j];
        if i > 0 && j > 0 {
            let same = hyp[i - 1] == reference[j - 1];
            let diag = d[(i - 1) * w + j - 1];
            if same && here == diag {
                script.push(EditOp::Match { hyp: i - 1, reference: j - 1 });
                i -= 1;
                j -= 1;
                continue;
            }
            if !same && here == diag + 1 {
                script.push(EditOp::Substitution { hyp: i - 1, reference: j - 1 });
                i -= 1;
                j -= 1;
                continue;
            }
        }
        if i > 0 && here == d[(i - 1) * w + j] + 1 {
            script.push(EditOp::Insertion { hyp: i - 1 });
            i -= 1;
        } else {
            script.push(EditOp::Deletion { reference: j - 1 });
            j -= 1;
        }
    }
    script.reverse();
    script
}

/// Total cost of a script.
pub fn edit_distance(script: &[EditOp]) -> usize {
    script.iter().map(EditOp::cost).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    Correct,
    Incorrect,
}

impl Label {
    pub fn name(self) -> &'static str {
        match self {
            Self::Correct => "correct",
            Self::Incorrect => "incorrect",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ErrorKind {
    None,
    Substitution,
    Insertion,
}

impl ErrorKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::None => "none",
            Self::Substitution => "substitution",
            Self::Insertion => "insertion",
        }
    }
}

/// A hypothesis word with its confidence and correctness.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledScore {
    pub utterance_id: String,
    pub word: String,
    pub confidence: f64,
    pub label: Label,
    pub error_kind: ErrorKind,
}

/// One [`LabeledScore`] per hypothesis word; deletions are dropped.
pub fn label_words(utterance_id: &str, words: &[WordScore], script: &[EditOp]) -> Result<Vec<LabeledScore>> {
    let mut out = Vec::with_capacity(words.len());
    for op in script {
        let (hyp, error_kind) = match *op {
            EditOp::Match { hyp, .. } => (hyp, ErrorKind::None),
            EditOp::Substitution { hyp, .. } => (hyp, ErrorKind::Substitution),
            EditOp::Insertion { hyp } => (hyp, ErrorKind::Insertion),
            EditOp::Deletion { .. } => continue,
        };
        // Hypothesis indices must appear in order, each exactly once.
        if hyp != out.len() || hyp >= words.len() {
            return Err(mismatch(words.len(), script));
        }
        let w = &words[hyp];
        out.push(LabeledScore {
            utterance_id: utterance_id.to_string(),
            word: w.surface.clone(),
            confidence: w.confidence,
            label: if error_kind == ErrorKind::None { Label::Correct } else { Label::Incorrect },
            error_kind,
        });
    }
    if out.len() != words.len() {
        return Err(mismatch(words.len(), script));
    }
    Ok(out)
}

fn mismatch(words: usize, script: &[EditOp]) -> Error {
    Error::ScriptMismatch {
        words,
        script_hyp: script.iter().filter(|op| op.hyp_index().is_some()).count(),
    }
}

/// Splits on whitespace and, when `lowercase` is set, lowercases every word.
/// Applied identically to hypotheses and references.
pub fn normalize_words(text: &str, lowercase: bool) -> Vec<String> {
    text.split_whitespace()
        .map(|w| if lowercase { w.to_lowercase() } else { w.to_string() })
        .collect()
}

/// Corpus-level edit counts.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AlignmentSummary {
    pub matches: usize,
    pub substitutions: usize,
    pub insertions: usize,
    pub deletions: usize,
    /// Total audio duration, when every utterance declared one.
    pub duration_seconds: Option<f64>,
}

impl AlignmentSummary {
    pub fn from_script(script: &[EditOp]) -> Self {
        let mut s = Self::default();
        s.add_script(script);
        s
    }

    pub fn add_script(&mut self, script: &[EditOp]) {
        for op in script {
            match op {
                EditOp::Match { .. } => self.matches += 1,
                EditOp::Substitution { .. } => self.substitutions += 1,
                EditOp::Insertion { .. } => self.insertions += 1,
                EditOp::Deletion { .. } => self.deletions += 1,
            }
        }
    }

    /// Adds counts; durations combine only if both sides have one.
    pub fn merge(&mut self, other: &Self) {
        self.matches += other.matches;
        self.substitutions += other.substitutions;
        self.insertions += other.insertions;
        self.deletions += other.deletions;
        self.duration_seconds = match (self.duration_seconds, other.duration_seconds) {
            (Some(a), Some(b)) => Some(a + b),
            _ => None,
        };
    }

    pub fn reference_words(&self) -> usize {
        self.matches + self.substitutions + self.deletions
    }

    /// `(S + I + D) / N`; `None` for an empty reference.
    pub fn wer(&self) -> Option<f64> {
        let n = self.reference_words();
        (n > 0).then(|| (self.substitutions + self.insertions + self.deletions) as f64 / n as f64)
    }

    /// Word insertions per second.
    pub fn wis(&self) -> Option<f64> {
        self.duration_seconds
            .filter(|&d| d > 0.0)
            .map(|d| self.insertions as f64 / d)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ws(words: &[&str]) -> Vec<WordScore> {
        words
            .iter()
            .map(|w| WordScore { surface: w.to_string(), unit_ids: vec![1], confidence: 0.5 })
            .collect()
    }

    #[test]
    fn identity_alignment() {
        let s = align(&["a", "b", "c"], &["a", "b", "c"]);
        assert!(s.iter().all(|op| matches!(op, EditOp::Match { .. })));
        assert_eq!(s.len(), 3);
        let labels = label_words("u", &ws(&["a", "b", "c"]), &s).unwrap();
        assert!(labels.iter().all(|l| l.label == Label::Correct));
    }

    #[test]
    fn substitution_in_the_middle() {
        let s = align(&["a", "x", "c"], &["a", "b", "c"]);
        assert_eq!(
            s,
            [
                EditOp::Match { hyp: 0, reference: 0 },
                EditOp::Substitution { hyp: 1, reference: 1 },
                EditOp::Match { hyp: 2, reference: 2 },
            ]
        );
        let labels = label_words("u", &ws(&["a", "x", "c"]), &s).unwrap();
        let kinds: Vec<_> = labels.iter().map(|l| l.error_kind).collect();
        assert_eq!(kinds, [ErrorKind::None, ErrorKind::Substitution, ErrorKind::None]);
        assert_eq!(labels[1].label, Label::Incorrect);
    }

    #[test]
    fn insertion_in_the_middle() {
        let s = align(&["a", "b", "c"], &["a", "c"]);
        assert_eq!(
            s,
            [
                EditOp::Match { hyp: 0, reference: 0 },
                EditOp::Insertion { hyp: 1 },
                EditOp::Match { hyp: 2, reference: 1 },
            ]
        );
    }

    #[test]
    fn deletions_produce_no_labels() {
        let s = align::<&str>(&[], &["a"]);
        assert_eq!(s, [EditOp::Deletion { reference: 0 }]);
        assert!(label_words("u", &[], &s).unwrap().is_empty());
    }

    #[test]
    fn pure_noise_is_all_insertions() {
        let s = align(&["x", "y"], &[] as &[&str]);
        let labels = label_words("n", &ws(&["x", "y"]), &s).unwrap();
        assert!(labels.iter().all(|l| l.error_kind == ErrorKind::Insertion));
        let sum = AlignmentSummary::from_script(&s);
        assert_eq!(sum.wer(), None);
        assert_eq!(sum.insertions, 2);
    }

    #[test]
    fn tie_break_prefers_substitution_over_indel() {
        // "a b" vs "b c": cost 2 either as two substitutions or as ins + del.
        let s = align(&["a", "b"], &["b", "c"]);
        assert_eq!(edit_distance(&s), 2);
        assert_eq!(
            s,
            [EditOp::Substitution { hyp: 0, reference: 0 }, EditOp::Substitution { hyp: 1, reference: 1 }]
        );
    }

    #[test]
    fn script_word_count_mismatch() {
        let s = align(&["a", "b"], &["a", "b"]);
        assert!(matches!(label_words("u", &ws(&["a"]), &s), Err(Error::ScriptMismatch { .. })));
        assert!(matches!(
            label_words("u", &ws(&["a", "b", "c"]), &s),
            Err(Error::ScriptMismatch { words: 3, script_hyp: 2 })
        ));
    }

    #[test]
    fn summary_wer_and_wis() {
        let mut sum = AlignmentSummary::from_script(&align(&["a", "x", "c", "d"], &["a", "b", "c"]));
        sum.duration_seconds = Some(2.0);
        assert_eq!(sum.wer(), Some(2.0 / 3.0));
        assert_eq!(sum.wis(), Some(0.5));
        let mut other = AlignmentSummary::default();
        other.merge(&sum);
        assert_eq!(other.duration_seconds, None);
    }

    #[test]
    fn normalization() {
        assert_eq!(normalize_words("  Hello   WORLD\tx ", true), ["hello", "world", "x"]);
        assert_eq!(normalize_words("Hello", false), ["Hello"]);
    }
}
