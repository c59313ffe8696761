//! Brute-force reference implementations. They share no code with the fast
//! paths in [`metrics`](crate::metrics) and [`align`](crate::align).

use crate::error::{Error, Result};
use crate::metrics::Scored;

/// Longest sequence accepted by [`oracle_levenshtein`].
pub const LEVENSHTEIN_MAX_LEN: usize = 12;

/// O(n^2) pairwise AUC-ROC with half credit for ties.
pub fn oracle_auc_roc<S: Scored>(scores: &[S]) -> Result<f64> {
    let mut credit = 0.0;
    let (mut pos, mut neg) = (0usize, 0usize);
    for a in scores.iter().filter(|s| s.is_correct()) {
        pos += 1;
        neg = 0;
        for b in scores.iter().filter(|s| !s.is_correct()) {
            neg += 1;
            if a.confidence() > b.confidence() {
                credit += 1.0;
            } else if a.confidence() == b.confidence() {
                credit += 0.5;
            }
        }
    }
    if pos == 0 || neg == 0 {
        return Err(Error::UndefinedMetric { metric: "oracle_auc_roc", reason: "single-class input" });
    }
    Ok(credit / (pos * neg) as f64)
}

/// Plain recursive edit distance.
pub fn oracle_levenshtein<T: PartialEq>(hyp: &[T], reference: &[T]) -> Result<usize> {
    let longest = hyp.len().max(reference.len());
    if longest > LEVENSHTEIN_MAX_LEN {
        return Err(Error::OracleGuard { max: LEVENSHTEIN_MAX_LEN, found: longest });
    }
    Ok(lev(hyp, reference))
}

fn lev<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    match (a.split_first(), b.split_first()) {
        (None, _) => b.len(),
        (_, None) => a.len(),
        (Some((x, ra)), Some((y, rb))) => {
            if x == y {
                // Matching heads never hurt.
                lev(ra, rb)
            } else {
                1 + lev(ra, rb).min(lev(ra, b)).min(lev(a, rb))
            }
        }
    }
}

/// Youden statistics by midpoint sampling of `tau` on `n_points` cells of
/// `[0, 1]`: `(auc, max, std)`.
pub fn oracle_youden_grid<S: Scored>(scores: &[S], n_points: usize) -> Result<(f64, f64, f64)> {
    let nc = scores.iter().filter(|s| s.is_correct()).count();
    let ni = scores.len() - nc;
    if nc == 0 || ni == 0 || n_points == 0 {
        return Err(Error::UndefinedMetric { metric: "oracle_youden_grid", reason: "single-class input" });
    }
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    let mut max = 0.0f64; // J(0) = 0
    for k in 0..n_points {
        let tau = (k as f64 + 0.5) / n_points as f64;
        let mut tn = 0usize;
        let mut fneg = 0usize;
        for s in scores {
            if s.confidence() < tau {
                if s.is_correct() {
                    fneg += 1;
                } else {
                    tn += 1;
                }
            }
        }
        let j = tn as f64 / ni as f64 - fneg as f64 / nc as f64;
        sum += j;
        sum_sq += j * j;
        max = max.max(j);
    }
    let mean = sum / n_points as f64;
    let var = sum_sq / n_points as f64 - mean * mean;
    Ok((mean, max, libm::sqrt(var.max(0.0))))
}
