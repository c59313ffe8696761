//! Word grouping and confidence aggregation.

use alloc::string::String;
use alloc::vec::Vec;

use crate::decode::{UnitScore, Vocab};
use crate::error::{Error, Result};

/// Aggregation used both from frames to units and from units to words.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AggKind {
    Mean,
    Min,
    Prod,
}

impl AggKind {
    pub const ALL: [AggKind; 3] = [Self::Mean, Self::Min, Self::Prod];

    pub fn name(self) -> &'static str {
        match self {
            Self::Mean => "mean",
            Self::Min => "min",
            Self::Prod => "prod",
        }
    }
}

pub fn aggregate(values: &[f64], agg: AggKind) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptyAggregation);
    }
    Ok(match agg {
        AggKind::Mean => values.iter().sum::<f64>() / values.len() as f64,
        AggKind::Min => values.iter().copied().fold(f64::INFINITY, f64::min),
        AggKind::Prod => values.iter().product(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct WordScore {
    pub surface: String,
    /// Token ids of the member units.
    pub unit_ids: Vec<usize>,
    pub confidence: f64,
}

/// Words built from one utterance.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Words {
    pub words: Vec<WordScore>,
    /// 1 if the utterance started with a continuation unit, which then opened
    /// an implicit word; 0 otherwise.
    pub implicit_heads: usize,
}

/// Partitions units at word-begin tokens and aggregates unit confidences.
///
/// # Panics
///
/// If a unit's token id is outside the vocabulary.
pub fn build_words(units: &[UnitScore], vocab: &Vocab, agg: AggKind) -> Words {
    let mut out = Words::default();
    let mut start = 0;
    for i in 1..=units.len() {
        if i == units.len() || vocab.is_word_begin(units[i].token_id) {
            let members = &units[start..i];
            if start == 0 && !members.is_empty() && !vocab.is_word_begin(members[0].token_id) {
                out.implicit_heads += 1;
            }
            if !members.is_empty() {
                out.words.push(word_from(members, vocab, agg));
            }
            start = i;
        }
    }
    out
}

fn word_from(members: &[UnitScore], vocab: &Vocab, agg: AggKind) -> WordScore {
    let mut surface = String::new();
    let mut unit_ids = Vec::with_capacity(members.len());
    let mut conf = Vec::with_capacity(members.len());
    for u in members {
        surface.push_str(vocab.surface(u.token_id));
        unit_ids.push(u.token_id);
        conf.push(u.unit_confidence);
    }
    let confidence = aggregate(&conf, agg).expect("word has at least one unit");
    WordScore { surface, unit_ids, confidence }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decode::Token;
    use alloc::vec;

    fn hello_vocab() -> Vocab {
        let t = |id, text: &str, word_begin| Token { id, text: text.into(), word_begin };
        Vocab::new(
            0,
            vec![
                t(0, "<blank>", false),
                t(1, "\u{2581}he", true),
                t(2, "llo", false),
                t(3, "\u{2581}a", true),
                t(4, "\u{2581}b", true),
            ],
        )
        .unwrap()
    }

    fn unit(token_id: usize, c: f64) -> UnitScore {
        UnitScore { token_id, frame_span: (0, 0), frame_confidences: vec![c], unit_confidence: c }
    }

    #[test]
    fn hello_min_and_prod() {
        let v = hello_vocab();
        let units = [unit(1, 0.9), unit(2, 0.6)];
        let w = build_words(&units, &v, AggKind::Min);
        assert_eq!(w.words.len(), 1);
        assert_eq!(w.words[0].surface, "hello");
        assert_eq!(w.words[0].confidence, 0.6);
        assert_eq!(w.words[0].unit_ids, [1, 2]);
        let w = build_words(&units, &v, AggKind::Prod);
        assert!((w.words[0].confidence - 0.54).abs() < 1e-15);
    }

    #[test]
    fn singleton_words() {
        let v = hello_vocab();
        let w = build_words(&[unit(3, 0.8), unit(4, 0.5)], &v, AggKind::Mean);
        let got: Vec<_> = w.words.iter().map(|w| (w.surface.as_str(), w.confidence)).collect();
        assert_eq!(got, [("a", 0.8), ("b", 0.5)]);
        assert_eq!(w.implicit_heads, 0);
    }

    #[test]
    fn leading_continuation_opens_implicit_word() {
        let v = hello_vocab();
        let w = build_words(&[unit(2, 0.7), unit(1, 0.9), unit(2, 0.8)], &v, AggKind::Min);
        assert_eq!(w.implicit_heads, 1);
        let surfaces: Vec<_> = w.words.iter().map(|w| w.surface.as_str()).collect();
        assert_eq!(surfaces, ["llo", "hello"]);
    }

    #[test]
    fn no_units_no_words() {
        assert_eq!(build_words(&[], &hello_vocab(), AggKind::Min), Words::default());
    }

    #[test]
    fn aggregate_examples() {
        for agg in AggKind::ALL {
            assert_eq!(aggregate(&[0.5], agg).unwrap(), 0.5);
        }
        assert_eq!(aggregate(&[0.9, 0.6, 0.5], AggKind::Min).unwrap(), 0.5);
        assert!((aggregate(&[0.9, 0.6, 0.5], AggKind::Prod).unwrap() - 0.27).abs() < 1e-15);
        assert_eq!(aggregate(&[], AggKind::Mean), Err(Error::EmptyAggregation));
    }
}
