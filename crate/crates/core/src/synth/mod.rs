//! Seeded synthetic posterior streams with known correctness.
//!
//! Each utterance draws reference words made of wordpiece units, injects
//! substitutions and insertions at `error_rate`, and renders the hypothesis as
//! a greedy CTC or RNN-T posterior stream. Every step's distribution is
//! `softmax(sharpness * logits)` where the emitted token's logit is
//! `gap + max(noise)` over zero-mean normal noise logits, so the argmax is
//! always the intended token. Units that carry an error get a smaller gap and
//! may get a narrower noise spread, which flattens their tail.
//!
//! Utterance `i` uses its own ChaCha stream derived from `(seed, i)`, so
//! utterances can be generated in any order or in parallel with identical
//! output.

pub mod oracle;

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::align::Label;
use crate::decode::{DecodeMode, Token, Vocab, WORD_BEGIN_MARKER};
use crate::error::{Error, Result};
use crate::math::exp;

pub use oracle::{oracle_auc_roc, oracle_levenshtein, oracle_youden_grid};

/// Seconds per decode step, used for utterance durations.
pub const FRAME_SECONDS: f64 = 0.04;

/// Smallest logit margin of the emitted token.
const MIN_GAP: f64 = 0.05;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    /// Vocabulary size including blank; at least 5.
    pub vocab_size: usize,
    pub blank_id: usize,
    pub n_utterances: usize,
    pub words_per_utterance: usize,
    /// Inclusive range of units per word, drawn uniformly.
    pub units_per_word: (usize, usize),
    /// Probability that a reference word position carries an error.
    pub error_rate: f64,
    /// Share of errors realized as insertions; the rest are substitutions.
    pub insertion_share: f64,
    /// Inverse softmax temperature; larger means more overconfident.
    pub sharpness: f64,
    /// Mean logit margin for correctly recognized units (and blanks).
    pub correct_gap: f64,
    /// Mean logit margin for erroneous units.
    pub incorrect_gap: f64,
    /// Standard deviation of the per-step margin around its mean.
    pub gap_spread: f64,
    /// Standard deviation of competitor logits for correct units and blanks.
    /// A wide spread leaves the residual mass on a few competitors.
    pub correct_noise: f64,
    /// Standard deviation of competitor logits for erroneous units. A narrow
    /// spread scatters the residual mass over the whole vocabulary.
    pub incorrect_noise: f64,
    pub mode: DecodeMode,
    /// Empty references: every emitted word is an insertion.
    pub pure_noise: bool,
    pub seed: u64,
}

impl Default for SynthConfig {
    /// Desk-scale preset: V = 128, 2000 utterances of 10 words, 6% errors.
    fn default() -> Self {
        Self {
            vocab_size: 128,
            blank_id: 0,
            n_utterances: 2000,
            words_per_utterance: 10,
            units_per_word: (1, 5),
            error_rate: 0.06,
            insertion_share: 0.2,
            sharpness: 2.0,
            correct_gap: 3.0,
            incorrect_gap: 1.0,
            gap_spread: 0.75,
            correct_noise: 1.0,
            incorrect_noise: 1.0,
            mode: DecodeMode::Ctc,
            pure_noise: false,
            seed: 0,
        }
    }
}

impl SynthConfig {
    /// Sharpened softmax where erroneous units still peak high (median
    /// per-step maximum probability above 0.9) but scatter their residual
    /// mass, while correct units keep it on a few competitors.
    pub fn overconfident() -> Self {
        Self {
            sharpness: 4.0,
            incorrect_gap: 1.25,
            correct_noise: 2.0,
            incorrect_noise: 0.5,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.vocab_size < 5 {
            return bad(format!("vocab_size must be at least 5, got {}", self.vocab_size));
        }
        if self.blank_id >= self.vocab_size {
            return bad(format!("blank_id {} out of range", self.blank_id));
        }
        let (lo, hi) = self.units_per_word;
        if lo == 0 || lo > hi {
            return bad(format!("units_per_word range {lo}..={hi} is invalid"));
        }
        if !(0.0..1.0).contains(&self.error_rate) {
            return bad(format!("error_rate must be in [0, 1), got {}", self.error_rate));
        }
        if !(0.0..=1.0).contains(&self.insertion_share) {
            return bad(format!("insertion_share must be in [0, 1], got {}", self.insertion_share));
        }
        for (name, v) in [
            ("sharpness", self.sharpness),
            ("correct_gap", self.correct_gap),
            ("incorrect_gap", self.incorrect_gap),
            ("correct_noise", self.correct_noise),
            ("incorrect_noise", self.incorrect_noise),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        if !(self.gap_spread.is_finite() && self.gap_spread >= 0.0) {
            return bad(format!("gap_spread must be non-negative, got {}", self.gap_spread));
        }
        Ok(())
    }

    fn code_width(&self) -> usize {
        let mut width = 2;
        while 26usize.pow(width as u32) < self.vocab_size {
            width += 1;
        }
        width
    }

    /// Non-blank ids that open a word, and continuation ids.
    fn token_classes(&self) -> (Vec<usize>, Vec<usize>) {
        let non_blank: Vec<usize> = (0..self.vocab_size).filter(|&i| i != self.blank_id).collect();
        let half = non_blank.len() / 2;
        (non_blank[..half].to_vec(), non_blank[half..].to_vec())
    }

    /// Vocabulary used by every utterance of this config. Token texts are
    /// fixed-width letter codes, so different unit sequences never spell the
    /// same word.
    pub fn vocab(&self) -> Vocab {
        let width = self.code_width();
        let (begin, _) = self.token_classes();
        let tokens = (0..self.vocab_size)
            .map(|id| {
                if id == self.blank_id {
                    return Token { id, text: "<blank>".into(), word_begin: false };
                }
                let word_begin = begin.contains(&id);
                let mut text = String::new();
                if word_begin {
                    text.push(WORD_BEGIN_MARKER);
                }
                let mut digits = vec![b'a'; width];
                let mut n = id;
                for d in digits.iter_mut().rev() {
                    *d = b'a' + (n % 26) as u8;
                    n /= 26;
                }
                text.push_str(core::str::from_utf8(&digits).expect("ascii"));
                Token { id, text, word_begin }
            })
            .collect();
        Vocab::new(self.blank_id, tokens).expect("synthetic vocabulary is valid")
    }
}

/// One generated utterance.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthUtterance {
    pub id: String,
    /// One probability vector per decode step.
    pub steps: Vec<Vec<f64>>,
    pub reference: Vec<String>,
    /// Words the stream decodes to.
    pub hypothesis: Vec<String>,
    /// Intended label of each hypothesis word.
    pub labels: Vec<Label>,
    pub duration_seconds: f64,
    /// Per-step maximum probability of steps emitting an erroneous unit.
    pub error_step_max_probs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthCorpus {
    pub vocab: Vocab,
    pub utterances: Vec<SynthUtterance>,
}

/// Utterance id for index `i`; ids sort in generation order.
pub fn utterance_id(i: usize) -> String {
    format!("utt{i:06}")
}

/// Generates the whole corpus serially.
pub fn generate(cfg: &SynthConfig) -> Result<SynthCorpus> {
    cfg.validate()?;
    let vocab = cfg.vocab();
    let utterances = (0..cfg.n_utterances)
        .map(|i| generate_utterance(cfg, &vocab, i))
        .collect();
    Ok(SynthCorpus { vocab, utterances })
}

struct HypWord {
    units: Vec<usize>,
    /// Which units carry the error margin.
    uncertain: Vec<bool>,
    label: Label,
}

/// Generates utterance `index`; depends only on `(cfg, index)`.
///
/// `cfg` must be valid and `vocab` must be `cfg.vocab()`.
pub fn generate_utterance(cfg: &SynthConfig, vocab: &Vocab, index: usize) -> SynthUtterance {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(index as u64);
    let (begin, cont) = cfg.token_classes();

    let random_word = |rng: &mut ChaCha8Rng| -> Vec<usize> {
        let n = rng.random_range(cfg.units_per_word.0..=cfg.units_per_word.1);
        let mut units = vec![begin[rng.random_range(0..begin.len())]];
        units.extend((1..n).map(|_| cont[rng.random_range(0..cont.len())]));
        units
    };

    let mut reference = Vec::new();
    let mut hyp: Vec<HypWord> = Vec::new();
    for _ in 0..cfg.words_per_utterance {
        let word = random_word(&mut rng);
        if cfg.pure_noise {
            let n = word.len();
            hyp.push(HypWord { units: word, uncertain: vec![true; n], label: Label::Incorrect });
            continue;
        }
        let n = word.len();
        let erroneous = rng.random_bool(cfg.error_rate);
        if erroneous && rng.random_bool(cfg.insertion_share) {
            let extra = random_word(&mut rng);
            let m = extra.len();
            hyp.push(HypWord { units: extra, uncertain: vec![true; m], label: Label::Incorrect });
            hyp.push(HypWord { units: word.clone(), uncertain: vec![false; n], label: Label::Correct });
        } else if erroneous {
            let mut units = word.clone();
            let pos = rng.random_range(0..n);
            let pool = if pos == 0 { &begin } else { &cont };
            let mut replacement = units[pos];
            while replacement == units[pos] {
                replacement = pool[rng.random_range(0..pool.len())];
            }
            units[pos] = replacement;
            let mut uncertain = vec![false; n];
            uncertain[pos] = true;
            hyp.push(HypWord { units, uncertain, label: Label::Incorrect });
        } else {
            hyp.push(HypWord { units: word.clone(), uncertain: vec![false; n], label: Label::Correct });
        }
        reference.push(surface(vocab, &word));
    }

    let mut r = StepRenderer { cfg, rng: &mut rng, steps: Vec::new(), error_max: Vec::new() };
    let blank = cfg.blank_id;
    let flat: Vec<(usize, bool)> = hyp
        .iter()
        .flat_map(|w| w.units.iter().copied().zip(w.uncertain.iter().copied()))
        .collect();
    match cfg.mode {
        DecodeMode::Ctc => {
            let lead = r.rng.random_range(0..=2);
            r.blanks(blank, lead);
            for (k, &(token, uncertain)) in flat.iter().enumerate() {
                let frames = r.rng.random_range(1..=2);
                for _ in 0..frames {
                    r.emit(token, uncertain);
                }
                let repeat_next = flat.get(k + 1).is_some_and(|&(t, _)| t == token);
                let min_blanks = usize::from(repeat_next);
                let n = r.rng.random_range(min_blanks..=2);
                r.blanks(blank, n);
            }
        }
        DecodeMode::Rnnt => {
            for &(token, uncertain) in &flat {
                let n = r.rng.random_range(0..=1);
                r.blanks(blank, n);
                r.emit(token, uncertain);
            }
            r.blanks(blank, 1);
        }
    }
    let StepRenderer { steps, error_max, .. } = r;

    SynthUtterance {
        id: utterance_id(index),
        duration_seconds: steps.len() as f64 * FRAME_SECONDS,
        steps,
        reference,
        hypothesis: hyp.iter().map(|w| surface(vocab, &w.units)).collect(),
        labels: hyp.iter().map(|w| w.label).collect(),
        error_step_max_probs: error_max,
    }
}

fn surface(vocab: &Vocab, units: &[usize]) -> String {
    units.iter().map(|&u| vocab.surface(u)).collect()
}

struct StepRenderer<'a> {
    cfg: &'a SynthConfig,
    rng: &'a mut ChaCha8Rng,
    steps: Vec<Vec<f64>>,
    error_max: Vec<f64>,
}

impl StepRenderer<'_> {
    fn blanks(&mut self, blank: usize, n: usize) {
        for _ in 0..n {
            self.emit(blank, false);
        }
    }

    fn emit(&mut self, token: usize, uncertain: bool) {
        let v = self.cfg.vocab_size;
        let (mean, scale) = if uncertain {
            (self.cfg.incorrect_gap, self.cfg.incorrect_noise)
        } else {
            (self.cfg.correct_gap, self.cfg.correct_noise)
        };
        let mut logits: Vec<f64> = (0..v)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut *self.rng);
                scale * z
            })
            .collect();
        logits[token] = f64::NEG_INFINITY;
        let top = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let jitter: f64 = StandardNormal.sample(&mut *self.rng);
        let gap = (mean + self.cfg.gap_spread * jitter).max(MIN_GAP);
        logits[token] = top + gap;

        let s = self.cfg.sharpness;
        let peak = s * logits[token];
        let mut probs: Vec<f64> = logits.iter().map(|&x| exp(s * x - peak)).collect();
        let total: f64 = probs.iter().sum();
        for p in &mut probs {
            *p /= total;
        }
        if uncertain {
            self.error_max.push(probs[token]);
        }
        self.steps.push(probs);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decode::{argmax_path, segment, BlankPolicy};
    use crate::words::{build_words, AggKind};
    use crate::decode::score_segments;

    fn small(mode: DecodeMode) -> SynthConfig {
        SynthConfig { n_utterances: 30, error_rate: 0.3, mode, seed: 7, ..SynthConfig::default() }
    }

    fn decoded_words(corpus: &SynthCorpus, cfg: &SynthConfig, u: &SynthUtterance) -> Vec<String> {
        let path = argmax_path(&u.steps, &corpus.vocab).unwrap();
        let segs = segment(&path, corpus.vocab.blank_id(), cfg.mode, BlankPolicy::Exclude);
        let conf = vec![1.0; u.steps.len()];
        let units = score_segments(&segs, &conf, AggKind::Min);
        build_words(&units, &corpus.vocab, AggKind::Min)
            .words
            .into_iter()
            .map(|w| w.surface)
            .collect()
    }

    #[test]
    fn streams_decode_to_intended_hypothesis() {
        for mode in [DecodeMode::Ctc, DecodeMode::Rnnt] {
            let cfg = small(mode);
            let corpus = generate(&cfg).unwrap();
            for u in &corpus.utterances {
                assert_eq!(decoded_words(&corpus, &cfg, u), u.hypothesis);
                assert_eq!(u.labels.len(), u.hypothesis.len());
            }
        }
    }

    #[test]
    fn no_errors_means_hypothesis_equals_reference() {
        let cfg = SynthConfig { error_rate: 0.0, ..small(DecodeMode::Ctc) };
        for u in generate(&cfg).unwrap().utterances {
            assert_eq!(u.hypothesis, u.reference);
            assert!(u.labels.iter().all(|&l| l == Label::Correct));
        }
    }

    #[test]
    fn same_seed_same_output_any_order() {
        let cfg = small(DecodeMode::Rnnt);
        let a = generate(&cfg).unwrap();
        let b = generate(&cfg).unwrap();
        assert_eq!(a, b);
        let vocab = cfg.vocab();
        assert_eq!(generate_utterance(&cfg, &vocab, 17), a.utterances[17]);
        let other = generate(&SynthConfig { seed: 8, ..cfg }).unwrap();
        assert_ne!(a.utterances[0].steps, other.utterances[0].steps);
    }

    #[test]
    fn overconfident_preset_peaks_on_errors() {
        let cfg = SynthConfig { n_utterances: 300, ..SynthConfig::overconfident() };
        let mut maxes: Vec<f64> = generate(&cfg)
            .unwrap()
            .utterances
            .into_iter()
            .flat_map(|u| u.error_step_max_probs)
            .collect();
        assert!(maxes.len() > 50);
        maxes.sort_by(f64::total_cmp);
        assert!(maxes[maxes.len() / 2] > 0.9, "median {}", maxes[maxes.len() / 2]);
    }

    #[test]
    fn pure_noise_has_empty_references() {
        let cfg = SynthConfig { pure_noise: true, n_utterances: 3, ..SynthConfig::default() };
        for u in generate(&cfg).unwrap().utterances {
            assert!(u.reference.is_empty());
            assert_eq!(u.hypothesis.len(), cfg.words_per_utterance);
            assert!(u.labels.iter().all(|&l| l == Label::Incorrect));
        }
    }

    #[test]
    fn vocab_codes_are_fixed_width() {
        let cfg = SynthConfig { vocab_size: 1024, ..SynthConfig::default() };
        let v = cfg.vocab();
        assert_eq!(v.size(), 1024);
        assert_eq!(v.surface(1).len(), 3);
        assert_eq!(v.surface(1023).len(), 3);
        assert!(!v.is_word_begin(0));
    }

    #[test]
    fn invalid_configs() {
        let base = SynthConfig::default();
        assert!(SynthConfig { vocab_size: 4, ..base.clone() }.validate().is_err());
        assert!(SynthConfig { error_rate: 1.0, ..base.clone() }.validate().is_err());
        assert!(SynthConfig { units_per_word: (0, 2), ..base.clone() }.validate().is_err());
        assert!(SynthConfig { sharpness: 0.0, ..base.clone() }.validate().is_err());
        assert!(SynthConfig { blank_id: 128, ..base }.validate().is_err());
    }
}
