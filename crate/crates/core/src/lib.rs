//! Entropy-based word confidence for greedy CTC and RNN-T decoding.
//!
//! The crate is `no_std` (it needs `alloc`) and covers the whole numeric
//! pipeline:
//!
//! * [`measures`]: per-frame confidence from a probability vector (maximum
//!   probability, Gibbs, Tsallis and Rényi entropies, each with linear or
//!   exponential normalization).
//! * [`decode`]: greedy argmax, CTC collapse and RNN-T emission handling, blank
//!   exclusion and per-unit confidence.
//! * [`words`]: word grouping by word-begin markers and word aggregation.
//! * [`align`]: hypothesis/reference alignment and correct/incorrect labeling.
//! * [`metrics`]: AUC (ROC, PR, NT), NCE, ECE, Youden-curve statistics,
//!   threshold transfer and histograms.
//! * [`pipeline`]: one-pass scoring of an utterance under many configurations.
//! * [`synth`]: seeded synthetic posterior streams plus brute-force oracles.
//!
//! File formats, reports and the command line live in the `entconf-cli` crate.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod align;
pub mod decode;
mod error;
mod math;
pub mod measures;
pub mod metrics;
pub mod pipeline;
pub mod synth;
pub mod words;

pub use align::{align, label_words, AlignmentSummary, EditOp, ErrorKind, Label, LabeledScore};
pub use decode::{
    collapse_stream, greedy_argmax, BlankPolicy, DecodeMode, EmissionStep, Token, UnitScore, Vocab,
};
pub use error::{DistributionError, Error, Result};
pub use math::fsum;
pub use measures::{confidence, MeasureConfig, MeasureKind, Normalization, ProbDist};
pub use metrics::{CurveReport, HistogramData, Scored, YoudenStats};
pub use pipeline::{score_utterance, PipelineOptions, ScoringConfig};
pub use words::{aggregate, build_words, AggKind, WordScore};
