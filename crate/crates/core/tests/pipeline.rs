//! Decode, word building and alignment properties on random streams.

use entconf::align::{align, edit_distance, label_words};
use entconf::decode::{
    argmax_path, collapse_stream, collapse_stream_with, step_confidences, transcript, BlankPolicy,
    DecodeMode, Token, Vocab,
};
use entconf::measures::{confidence, MeasureConfig, Normalization, ProbDist};
use entconf::synth::oracle_levenshtein;
use entconf::words::{aggregate, build_words, AggKind};
use proptest::prelude::*;

const V: usize = 7;

/// blank = 0, ids 1..=3 open a word, 4..=6 continue one.
fn vocab() -> Vocab {
    let tokens = (0..V)
        .map(|id| Token {
            id,
            text: match id {
                0 => "<b>".to_string(),
                1..=3 => format!("\u{2581}{}", (b'a' + id as u8) as char),
                _ => ((b'a' + id as u8) as char).to_string(),
            },
            word_begin: (1..=3).contains(&id),
        })
        .collect();
    Vocab::new(0, tokens).unwrap()
}

fn row(token: usize, peak: f64) -> Vec<f64> {
    let mut r = vec![(1.0 - peak) / (V - 1) as f64; V];
    r[token] = peak;
    r
}

fn stream() -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec((0..V, 0.3f64..1.0), 0..40)
        .prop_map(|s| s.into_iter().map(|(t, p)| row(t, p)).collect())
}

/// Textbook greedy CTC: merge repeats, then drop blanks.
fn naive_ctc(path: &[usize]) -> Vec<usize> {
    let mut out = Vec::new();
    let mut prev = None;
    for &t in path {
        if Some(t) != prev && t != 0 {
            out.push(t);
        }
        prev = Some(t);
    }
    out
}

fn naive_argmax(r: &[f64]) -> usize {
    let mut best = 0;
    for i in 0..r.len() {
        if r[i] > r[best] {
            best = i;
        }
    }
    best
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn collapse_matches_naive_transcript(steps in stream()) {
        let v = vocab();
        let cfg = MeasureConfig::tsallis(Normalization::Exponential, 1.0 / 3.0).unwrap();
        let path: Vec<usize> = steps.iter().map(|r| naive_argmax(r)).collect();

        let ctc = collapse_stream(&steps, &v, DecodeMode::Ctc, &cfg, AggKind::Min).unwrap();
        let want = naive_ctc(&path);
        prop_assert_eq!(ctc.iter().map(|u| u.token_id).collect::<Vec<_>>(), want.clone());
        prop_assert_eq!(transcript(ctc.iter().map(|u| u.token_id), &v), transcript(want, &v));
        prop_assert!(ctc.len() <= steps.len());

        let rnnt = collapse_stream(&steps, &v, DecodeMode::Rnnt, &cfg, AggKind::Min).unwrap();
        prop_assert_eq!(rnnt.len(), path.iter().filter(|&&t| t != 0).count());
        for u in ctc.iter().chain(&rnnt) {
            prop_assert!(u.token_id != v.blank_id());
        }
    }

    #[test]
    fn unit_frames_use_full_distribution_confidence(steps in stream(), include in any::<bool>()) {
        let v = vocab();
        let cfg = MeasureConfig::renyi(Normalization::Linear, 0.25).unwrap();
        let blank = if include { BlankPolicy::Include } else { BlankPolicy::Exclude };
        let units = collapse_stream_with(&steps, &v, DecodeMode::Ctc, blank, &cfg, AggKind::Mean).unwrap();
        for u in &units {
            let (a, b) = u.frame_span;
            prop_assert_eq!(u.frame_confidences.len(), b - a + 1);
            for (k, c) in u.frame_confidences.iter().enumerate() {
                let want = confidence(ProbDist::new(&steps[a + k]).unwrap(), &cfg).unwrap();
                prop_assert_eq!(*c, want);
            }
            prop_assert_eq!(u.unit_confidence, aggregate(&u.frame_confidences, AggKind::Mean).unwrap());
        }
        if include && !units.is_empty() {
            // With blanks included, units tile the stream from their first
            // frame to the end.
            let covered: usize = units.iter().map(|u| u.frame_span.1 - u.frame_span.0 + 1).sum();
            prop_assert_eq!(covered, steps.len() - units[0].frame_span.0);
        }
    }

    #[test]
    fn aggregation_ordering(values in prop::collection::vec(0.0f64..=1.0, 1..12)) {
        let mean = aggregate(&values, AggKind::Mean).unwrap();
        let min = aggregate(&values, AggKind::Min).unwrap();
        let prod = aggregate(&values, AggKind::Prod).unwrap();
        prop_assert!(prod <= min + 1e-15 && min <= mean + 1e-15);
        prop_assert!((0.0..=1.0).contains(&prod) && mean <= 1.0 + 1e-15);
        if values.len() == 1 {
            prop_assert!(mean == min && min == prod);
        }
    }

    #[test]
    fn word_count_follows_word_begin_markers(steps in stream()) {
        let v = vocab();
        let units = collapse_stream(&steps, &v, DecodeMode::Rnnt, &MeasureConfig::max_prob(), AggKind::Min).unwrap();
        let words = build_words(&units, &v, AggKind::Prod);
        let begins = units.iter().filter(|u| v.is_word_begin(u.token_id)).count();
        prop_assert_eq!(words.words.len(), begins + words.implicit_heads);
        prop_assert!(words.implicit_heads <= 1);
        let joined: Vec<&str> = words.words.iter().map(|w| w.surface.as_str()).collect();
        prop_assert_eq!(joined.join(" "), transcript(units.iter().map(|u| u.token_id), &v));
    }

    #[test]
    fn alignment_matches_recursive_oracle(
        hyp in prop::collection::vec(0u8..4, 0..=8),
        reference in prop::collection::vec(0u8..4, 0..=8),
    ) {
        let script = align(&hyp, &reference);
        prop_assert_eq!(edit_distance(&script), oracle_levenshtein(&hyp, &reference).unwrap());
        let words: Vec<_> = hyp
            .iter()
            .map(|h| entconf::WordScore { surface: h.to_string(), unit_ids: vec![1], confidence: 0.5 })
            .collect();
        let labels = label_words("u", &words, &script).unwrap();
        prop_assert_eq!(labels.len(), hyp.len());
    }
}

#[test]
fn step_confidences_validate_rows() {
    let bad = vec![vec![0.6, 0.6]];
    assert!(step_confidences(&bad, &MeasureConfig::max_prob()).is_err());
    assert!(argmax_path(&bad, &vocab()).is_err());
}
