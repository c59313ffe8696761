//! Confidence evaluation metrics over labeled word scores.
//!
//! Correct words are the positive class everywhere except `auc_nt`, which
//! treats errors as positives. Threshold semantics: a word is predicted
//! incorrect iff `confidence < tau`, so `tau = 0` rejects nothing.
//!
//! Metrics that need both classes return [`Error::UndefinedMetric`] on
//! single-class input; [`evaluate`] turns those into `None`.

use alloc::vec;
use alloc::vec::Vec;

use crate::align::{Label, LabeledScore};
use crate::error::{Error, Result};
use crate::math::{floor, fsum, log, sqrt};

/// NCE clamps confidences to `[NCE_EPSILON, 1 - NCE_EPSILON]`.
pub const NCE_EPSILON: f64 = 1e-15;

pub const DEFAULT_ECE_BINS: usize = 10;

/// Anything with a confidence and a binary correctness label.
pub trait Scored {
    fn confidence(&self) -> f64;
    fn is_correct(&self) -> bool;
}

impl Scored for LabeledScore {
    fn confidence(&self) -> f64 {
        self.confidence
    }
    fn is_correct(&self) -> bool {
        self.label == Label::Correct
    }
}

impl Scored for (f64, Label) {
    fn confidence(&self) -> f64 {
        self.0
    }
    fn is_correct(&self) -> bool {
        self.1 == Label::Correct
    }
}

impl Scored for (f64, bool) {
    fn confidence(&self) -> f64 {
        self.0
    }
    fn is_correct(&self) -> bool {
        self.1
    }
}

impl<T: Scored + ?Sized> Scored for &T {
    fn confidence(&self) -> f64 {
        (**self).confidence()
    }
    fn is_correct(&self) -> bool {
        (**self).is_correct()
    }
}

fn split<S: Scored>(scores: &[S]) -> (Vec<f64>, Vec<f64>) {
    let mut correct = Vec::new();
    let mut incorrect = Vec::new();
    for s in scores {
        if s.is_correct() {
            correct.push(s.confidence());
        } else {
            incorrect.push(s.confidence());
        }
    }
    (correct, incorrect)
}

fn undefined(metric: &'static str, reason: &'static str) -> Error {
    Error::UndefinedMetric { metric, reason }
}

fn need_both(metric: &'static str, correct: &[f64], incorrect: &[f64]) -> Result<()> {
    if correct.is_empty() {
        return Err(undefined(metric, "no correct words"));
    }
    if incorrect.is_empty() {
        return Err(undefined(metric, "no incorrect words"));
    }
    Ok(())
}

/// Probability that a random correct word outscores a random incorrect one,
/// ties counting one half.
pub fn auc_roc<S: Scored>(scores: &[S]) -> Result<f64> {
    let (correct, mut incorrect) = split(scores);
    need_both("auc_roc", &correct, &incorrect)?;
    incorrect.sort_by(f64::total_cmp);
    // Twice the Mann-Whitney U, kept integral so the result is exact.
    let mut twice_u: u128 = 0;
    for c in correct.iter().copied() {
        let below = incorrect.partition_point(|&x| x < c);
        let not_above = incorrect.partition_point(|&x| x <= c);
        twice_u += (2 * below + (not_above - below)) as u128;
    }
    Ok(twice_u as f64 / (2 * correct.len() as u128 * incorrect.len() as u128) as f64)
}

/// Average precision: `sum (R_k - R_{k-1}) P_k` over every distinct score
/// threshold, highest first.
fn average_precision(mut items: Vec<(f64, bool)>) -> Option<f64> {
    let positives = items.iter().filter(|(_, p)| *p).count();
    if positives == 0 {
        return None;
    }
    items.sort_by(|a, b| b.0.total_cmp(&a.0));
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut ap = 0.0;
    let mut i = 0;
    while i < items.len() {
        let score = items[i].0;
        let mut group_tp = 0;
        while i < items.len() && items[i].0 == score {
            if items[i].1 {
                group_tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        tp += group_tp;
        if group_tp > 0 {
            let precision = tp as f64 / (tp + fp) as f64;
            ap += group_tp as f64 / positives as f64 * precision;
        }
    }
    Some(ap)
}

/// Area under precision-recall with correct words as positives.
pub fn auc_pr<S: Scored>(scores: &[S]) -> Result<f64> {
    average_precision(scores.iter().map(|s| (s.confidence(), s.is_correct())).collect())
        .ok_or_else(|| undefined("auc_pr", "no correct words"))
}

/// Area under NPV vs TNR: precision-recall with incorrect words as positives
/// and `1 - confidence` as the score.
pub fn auc_nt<S: Scored>(scores: &[S]) -> Result<f64> {
    average_precision(scores.iter().map(|s| (1.0 - s.confidence(), !s.is_correct())).collect())
        .ok_or_else(|| undefined("auc_nt", "no incorrect words"))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Nce {
    pub value: f64,
    /// Scores that had to be clamped away from 0 or 1.
    pub clamped: usize,
}

/// Normalized cross entropy against the constant `p_c` baseline.
pub fn nce<S: Scored>(scores: &[S]) -> Result<Nce> {
    let (mut n_c, mut n_i) = (0usize, 0usize);
    let mut clamped = 0;
    let mut log_terms = Vec::with_capacity(scores.len());
    for s in scores {
        let raw = s.confidence();
        let c = raw.clamp(NCE_EPSILON, 1.0 - NCE_EPSILON);
        if c != raw {
            clamped += 1;
        }
        if s.is_correct() {
            n_c += 1;
            log_terms.push(log(c));
        } else {
            n_i += 1;
            log_terms.push(log(1.0 - c));
        }
    }
    if n_c == 0 || n_i == 0 {
        return Err(undefined("nce", "needs both correct and incorrect words"));
    }
    let log_lik = fsum(log_terms);
    let p_c = n_c as f64 / (n_c + n_i) as f64;
    let h_max = -(n_c as f64) * log(p_c) - n_i as f64 * log(1.0 - p_c);
    // The ln 2 factors of the base-2 definition cancel in the ratio.
    Ok(Nce { value: (h_max + log_lik) / h_max, clamped })
}

fn bin_index(c: f64, n_bins: usize) -> usize {
    let c = c.clamp(0.0, 1.0);
    (floor(c * n_bins as f64) as usize).min(n_bins - 1)
}

/// Expected calibration error over `n_bins` equal-width bins; the last bin is
/// closed on the right.
pub fn ece<S: Scored>(scores: &[S], n_bins: usize) -> Result<f64> {
    if n_bins == 0 {
        return Err(Error::InvalidConfig("ece needs at least one bin".into()));
    }
    if scores.is_empty() {
        return Err(undefined("ece", "no words"));
    }
    let mut count = vec![0usize; n_bins];
    let mut correct = vec![0usize; n_bins];
    let mut confs: Vec<Vec<f64>> = vec![Vec::new(); n_bins];
    for s in scores {
        let b = bin_index(s.confidence(), n_bins);
        count[b] += 1;
        correct[b] += usize::from(s.is_correct());
        confs[b].push(s.confidence());
    }
    let n = scores.len() as f64;
    let mut total = 0.0;
    for b in 0..n_bins {
        if count[b] == 0 {
            continue;
        }
        let k = count[b] as f64;
        let conf_sum = fsum(confs[b].iter().copied());
        total += k / n * (correct[b] as f64 / k - conf_sum / k).abs();
    }
    Ok(total)
}

/// Youden-curve statistics of `J(tau) = TNR(tau) - FNR(tau)` over `tau` in
/// `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct YoudenStats {
    /// `integral_0^1 J`.
    pub auc: f64,
    /// `sup J`; at least 0 because `J(0) = 0`.
    pub max: f64,
    /// `sqrt(integral J^2 - auc^2)`.
    pub std: f64,
}

/// Exact step-function integration of the Youden curve.
///
/// `J` is constant on `(u_k, u_{k+1}]` for consecutive distinct scores `u_k`.
/// Scores are clamped to `[0, 1]` first, which does not change `J` on that
/// range.
pub fn youden_stats<S: Scored>(scores: &[S]) -> Result<YoudenStats> {
    let (correct, incorrect) = split(scores);
    need_both("youden", &correct, &incorrect)?;
    let (nc, ni) = (correct.len() as f64, incorrect.len() as f64);
    let mut items: Vec<(f64, bool)> = scores
        .iter()
        .map(|s| (s.confidence().clamp(0.0, 1.0), s.is_correct()))
        .collect();
    items.sort_by(|a, b| a.0.total_cmp(&b.0));

    let (mut below_c, mut below_i) = (0usize, 0usize);
    let (mut area, mut area_sq, mut max) = (0.0, 0.0, 0.0f64);
    let mut i = 0;
    while i < items.len() {
        let u = items[i].0;
        while i < items.len() && items[i].0 == u {
            if items[i].1 {
                below_c += 1;
            } else {
                below_i += 1;
            }
            i += 1;
        }
        let next = if i < items.len() { items[i].0 } else { 1.0 };
        let width = next - u;
        if width > 0.0 {
            let j = below_i as f64 / ni - below_c as f64 / nc;
            area += j * width;
            area_sq += j * j * width;
            max = max.max(j);
        }
    }
    Ok(YoudenStats { auc: area, max, std: sqrt((area_sq - area * area).max(0.0)) })
}

/// Result of choosing a threshold on one set and applying it to another.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transfer {
    /// Largest threshold whose calibration FNR stays within budget.
    pub tau: f64,
    pub calibration_fnr: f64,
    /// TNR on the evaluation set at `tau`.
    pub tnr: f64,
    /// Set when only `tau = 0` meets the budget.
    pub degenerate: bool,
}

/// Fraction of `values` strictly below `tau`.
fn rate_below(values: &[f64], tau: f64) -> f64 {
    values.iter().filter(|&&v| v < tau).count() as f64 / values.len() as f64
}

/// Picks `tau*` on `calibration` under an FNR budget and reports the TNR it
/// achieves on `evaluation`.
pub fn tnr_transfer<A: Scored, B: Scored>(calibration: &[A], evaluation: &[B], fnr_budget: f64) -> Result<Transfer> {
    if !(fnr_budget > 0.0 && fnr_budget < 1.0) {
        return Err(Error::InvalidConfig("fnr budget must be in (0, 1)".into()));
    }
    let (mut correct, _) = split(calibration);
    if correct.is_empty() {
        return Err(undefined("tnr_transfer", "calibration set has no correct words"));
    }
    let (_, incorrect) = split(evaluation);
    if incorrect.is_empty() {
        return Err(undefined("tnr_transfer", "evaluation set has no incorrect words"));
    }
    correct.sort_by(f64::total_cmp);
    let n = correct.len();
    // Largest k with k / n <= budget; tau = the (k+1)-th smallest correct
    // score rejects exactly the k scores strictly below it at most.
    let mut k = (floor(fnr_budget * n as f64) as usize).min(n);
    while k > 0 && k as f64 / n as f64 > fnr_budget {
        k -= 1;
    }
    while k < n && (k + 1) as f64 / n as f64 <= fnr_budget {
        k += 1;
    }
    let tau = if k < n { correct[k].clamp(0.0, 1.0) } else { 1.0 };
    Ok(Transfer {
        tau,
        calibration_fnr: rate_below(&correct, tau),
        tnr: rate_below(&incorrect, tau),
        degenerate: tau <= 0.0,
    })
}

/// Per-label counts over equal-width bins of `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct HistogramData {
    /// `n_bins + 1` edges.
    pub edges: Vec<f64>,
    pub correct: Vec<usize>,
    pub incorrect: Vec<usize>,
}

/// Bins are `[lo, hi)` except the last, which is `[lo, 1]`.
pub fn histogram<S: Scored>(scores: &[S], n_bins: usize) -> Result<HistogramData> {
    if n_bins == 0 {
        return Err(Error::InvalidConfig("histogram needs at least one bin".into()));
    }
    let edges = (0..=n_bins).map(|i| i as f64 / n_bins as f64).collect();
    let mut correct = vec![0; n_bins];
    let mut incorrect = vec![0; n_bins];
    for s in scores {
        let b = bin_index(s.confidence(), n_bins);
        if s.is_correct() {
            correct[b] += 1;
        } else {
            incorrect[b] += 1;
        }
    }
    Ok(HistogramData { edges, correct, incorrect })
}

/// Every metric for one configuration. Undefined metrics are `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveReport {
    pub n_correct: usize,
    pub n_incorrect: usize,
    pub auc_roc: Option<f64>,
    pub auc_pr: Option<f64>,
    pub auc_nt: Option<f64>,
    pub nce: Option<f64>,
    pub nce_clamped: usize,
    pub ece: Option<f64>,
    pub auc_yc: Option<f64>,
    pub max_yc: Option<f64>,
    pub std_yc: Option<f64>,
    /// `auc_yc < std_yc`: the scores probably do not cover the whole `[0, 1]`
    /// range.
    pub spectrum_flag: Option<bool>,
}

impl CurveReport {
    /// True when no metric that needs both classes could be computed. ECE and
    /// one of the two AP variants can stay defined on single-class data; they
    /// are not considered.
    pub fn all_undefined(&self) -> bool {
        [self.auc_roc, self.nce, self.auc_yc]
            .iter()
            .all(Option::is_none)
    }
}

pub fn evaluate<S: Scored>(scores: &[S], ece_bins: usize) -> CurveReport {
    let n_correct = scores.iter().filter(|s| s.is_correct()).count();
    let nce = nce(scores).ok();
    let yc = youden_stats(scores).ok();
    CurveReport {
        n_correct,
        n_incorrect: scores.len() - n_correct,
        auc_roc: auc_roc(scores).ok(),
        auc_pr: auc_pr(scores).ok(),
        auc_nt: auc_nt(scores).ok(),
        nce: nce.map(|n| n.value),
        nce_clamped: nce.map_or(0, |n| n.clamped),
        ece: ece(scores, ece_bins).ok(),
        auc_yc: yc.map(|y| y.auc),
        max_yc: yc.map(|y| y.max),
        std_yc: yc.map(|y| y.std),
        spectrum_flag: yc.map(|y| y.auc < y.std),
    }
}
