//! `oracle-check`: fast paths against brute-force oracles on seeded random
//! inputs.

use entconf::align::{align, edit_distance};
use entconf::metrics::{auc_nt, auc_pr, auc_roc, youden_stats};
use entconf::synth::{oracle_auc_roc, oracle_levenshtein, oracle_youden_grid};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::{FromConfigFile, OracleArgs};
use crate::error::{CliError, Result};
use crate::run::Outcome;

pub const DEFAULT_CASES: usize = 100;
pub const YOUDEN_GRID_POINTS: usize = 100_000;
pub const YOUDEN_TOLERANCE: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub cases: usize,
    pub max_error: f64,
    pub tolerance: f64,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.max_error <= self.tolerance
    }

    pub fn line(&self) -> String {
        format!(
            "{} {}: {} cases, max error {:e} (tolerance {:e})",
            if self.passed() { "PASS" } else { "FAIL" },
            self.name,
            self.cases,
            self.max_error,
            self.tolerance
        )
    }
}

/// Random scored dataset with both classes, `2..=max_len` words. Quantized
/// sets put scores on a 1/1000 grid, which makes ties common and keeps every
/// Youden step wider than the oracle's grid spacing.
pub fn random_dataset(rng: &mut ChaCha8Rng, max_len: usize, quantized: bool) -> Vec<(f64, bool)> {
    let n = rng.random_range(2..=max_len);
    let p_correct = rng.random_range(0.1..0.9);
    let mut s: Vec<(f64, bool)> = (0..n)
        .map(|_| {
            let c = if quantized { rng.random_range(0..=1000u32) as f64 / 1000.0 } else { rng.random::<f64>() };
            (c, rng.random_bool(p_correct))
        })
        .collect();
    s[0].1 = true;
    s[1].1 = false;
    s
}

fn max_abs(values: impl Iterator<Item = f64>) -> f64 {
    values.fold(0.0, f64::max)
}

pub fn run_checks(seed: u64, cases: usize) -> Vec<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mixed: Vec<_> = (0..cases).map(|i| random_dataset(&mut rng, 200, i % 2 == 0)).collect();
    let quantized: Vec<_> = (0..cases).map(|_| random_dataset(&mut rng, 200, true)).collect();
    let pairs: Vec<(Vec<u8>, Vec<u8>)> = (0..cases * 5)
        .map(|_| {
            let seq = |rng: &mut ChaCha8Rng| {
                let n = rng.random_range(0..=8);
                (0..n).map(|_| rng.random_range(0..4u8)).collect::<Vec<_>>()
            };
            (seq(&mut rng), seq(&mut rng))
        })
        .collect();

    let auc = max_abs(mixed.iter().map(|s| (auc_roc(s).unwrap() - oracle_auc_roc(s).unwrap()).abs()));
    let nt = max_abs(mixed.iter().map(|s| {
        let flipped: Vec<_> = s.iter().map(|&(c, l)| (1.0 - c, !l)).collect();
        (auc_nt(s).unwrap() - auc_pr(&flipped).unwrap()).abs()
    }));
    let lev = max_abs(pairs.iter().map(|(h, r)| {
        let fast = edit_distance(&align(h, r)) as f64;
        (fast - oracle_levenshtein(h, r).unwrap() as f64).abs()
    }));
    let youden: Vec<(f64, f64)> = quantized
        .par_iter()
        .map(|s| {
            let exact = youden_stats(s).unwrap();
            let (a, m, sd) = oracle_youden_grid(s, YOUDEN_GRID_POINTS).unwrap();
            ((exact.auc - a).abs().max((exact.std - sd).abs()), (exact.max - m).abs())
        })
        .collect();

    vec![
        Check { name: "auc_roc vs pairwise oracle", cases, max_error: auc, tolerance: 0.0 },
        Check { name: "auc_nt vs auc_pr of flipped labels", cases, max_error: nt, tolerance: 0.0 },
        Check { name: "edit distance vs recursive oracle", cases: pairs.len(), max_error: lev, tolerance: 0.0 },
        Check {
            name: "auc_yc and std_yc vs 1e5-point grid",
            cases,
            max_error: max_abs(youden.iter().map(|y| y.0)),
            tolerance: YOUDEN_TOLERANCE,
        },
        Check {
            name: "max_yc vs 1e5-point grid",
            cases,
            max_error: max_abs(youden.iter().map(|y| y.1)),
            tolerance: YOUDEN_TOLERANCE,
        },
    ]
}

pub fn run_oracle_check(args: OracleArgs) -> Result<Outcome> {
    let args = args.merged()?;
    let cases = args.cases.unwrap_or(DEFAULT_CASES);
    if cases == 0 {
        return Err(CliError::Config("--cases must be at least 1".into()));
    }
    let checks = run_checks(args.seed.unwrap_or(0), cases);
    for c in &checks {
        println!("{}", c.line());
    }
    let failed: Vec<&str> = checks.iter().filter(|c| !c.passed()).map(|c| c.name).collect();
    if failed.is_empty() {
        Ok(Outcome::Success)
    } else {
        Err(CliError::OracleMismatch(failed.join(", ")))
    }
}
