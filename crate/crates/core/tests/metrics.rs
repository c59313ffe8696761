use entconf::metrics::{
    auc_nt, auc_pr, auc_roc, ece, evaluate, nce, youden_stats, DEFAULT_ECE_BINS,
};
use entconf::synth::{oracle_auc_roc, oracle_youden_grid};
use proptest::prelude::*;
use proptest::strategy::ValueTree;

/// Scores on a 1/1000 grid so ties are frequent and every Youden step is at
/// least one grid cell wide.
fn dataset(max: usize) -> impl Strategy<Value = Vec<(f64, bool)>> {
    prop::collection::vec((0u32..=1000, any::<bool>()), 2..=max)
        .prop_map(|v| v.into_iter().map(|(k, c)| (k as f64 / 1000.0, c)).collect())
        .prop_filter("both classes", |v: &Vec<(f64, bool)>| {
            v.iter().any(|s| s.1) && v.iter().any(|s| !s.1)
        })
}

fn continuous(max: usize) -> impl Strategy<Value = Vec<(f64, bool)>> {
    prop::collection::vec((0.0f64..=1.0, any::<bool>()), 2..=max).prop_filter("both classes", |v| {
        v.iter().any(|s| s.1) && v.iter().any(|s| !s.1)
    })
}

fn flip(s: &[(f64, bool)]) -> Vec<(f64, bool)> {
    s.iter().map(|&(c, l)| (1.0 - c, !l)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn auc_roc_equals_pairwise_oracle(s in prop_oneof![dataset(200), continuous(200)]) {
        prop_assert_eq!(auc_roc(&s).unwrap(), oracle_auc_roc(&s).unwrap());
    }

    #[test]
    fn auc_nt_is_flipped_auc_pr(s in prop_oneof![dataset(200), continuous(200)]) {
        prop_assert_eq!(auc_nt(&s).unwrap(), auc_pr(&flip(&s)).unwrap());
    }

    #[test]
    fn permutation_invariance(s in continuous(120), rot in 0usize..120) {
        let mut t = s.clone();
        t.reverse();
        let k = rot % t.len();
        t.rotate_left(k);
        prop_assert_eq!(evaluate(&s, 10), evaluate(&t, 10));
    }

    #[test]
    fn monotone_transform_keeps_ranking_metrics(s in dataset(150)) {
        // sqrt is strictly increasing on [0, 1] and keeps the range.
        let t: Vec<_> = s.iter().map(|&(c, l)| (c.sqrt(), l)).collect();
        prop_assert_eq!(auc_roc(&s).unwrap(), auc_roc(&t).unwrap());
        prop_assert_eq!(auc_pr(&s).unwrap(), auc_pr(&t).unwrap());
        prop_assert_eq!(youden_stats(&s).unwrap().max, youden_stats(&t).unwrap().max);
        // AUC_NT sees 1 - c, which can merge distinct scores only through rounding;
        // on the 1/1000 grid they stay distinct.
        prop_assert_eq!(auc_nt(&s).unwrap(), auc_nt(&t).unwrap());
    }

    #[test]
    fn nce_zero_for_constant_estimator(labels in prop::collection::vec(any::<bool>(), 2..200)) {
        prop_assume!(labels.iter().any(|&l| l) && labels.iter().any(|&l| !l));
        let p_c = labels.iter().filter(|&&l| l).count() as f64 / labels.len() as f64;
        let s: Vec<_> = labels.iter().map(|&l| (p_c, l)).collect();
        prop_assert!(nce(&s).unwrap().value.abs() <= 1e-12);
    }

    #[test]
    fn ece_zero_when_bins_are_calibrated(
        bins in prop::collection::vec((0usize..10, 1usize..6, 0usize..6), 1..10),
    ) {
        // Each bin gets words at a confidence equal to their accuracy; bins
        // whose accuracy falls outside the bin are skipped.
        let mut s = Vec::new();
        for (b, correct, incorrect) in bins {
            let n = correct + incorrect;
            let acc = correct as f64 / n as f64;
            let lo = b as f64 / 10.0;
            let hi = lo + 0.1;
            let conf = if acc >= lo && acc < hi { acc } else { continue };
            s.extend(std::iter::repeat_n((conf, true), correct));
            s.extend(std::iter::repeat_n((conf, false), incorrect));
        }
        prop_assume!(!s.is_empty());
        prop_assert!(ece(&s, DEFAULT_ECE_BINS).unwrap() < 1e-12);
    }
}

#[test]
fn youden_matches_grid_integration() {
    let mut runner = proptest::test_runner::TestRunner::deterministic();
    for _ in 0..40 {
        let s = dataset(200).new_tree(&mut runner).unwrap().current();
        let exact = youden_stats(&s).unwrap();
        let (auc, max, std) = oracle_youden_grid(&s, 100_000).unwrap();
        assert!((exact.auc - auc).abs() <= 1e-3, "auc {} vs {auc}", exact.auc);
        assert!((exact.std - std).abs() <= 1e-3, "std {} vs {std}", exact.std);
        assert_eq!(exact.max, max);
    }
}

#[test]
fn auc_yc_changes_under_monotone_transform() {
    let s = vec![(0.2, false), (0.5, true), (0.6, false), (0.9, true)];
    let t: Vec<_> = s.iter().map(|&(c, l): &(f64, bool)| (c * c, l)).collect();
    assert_eq!(auc_roc(&s).unwrap(), auc_roc(&t).unwrap());
    assert_ne!(youden_stats(&s).unwrap().auc, youden_stats(&t).unwrap().auc);
}
