//! `eval` and `transfer` drivers.
//!
//! Utterances are scored in parallel and merged in utterance-id order, then
//! metrics run per configuration. No reported number depends on the thread
//! count.

use std::path::{Path, PathBuf};

use entconf::metrics::{evaluate, histogram, tnr_transfer, Transfer};
use entconf::{score_utterance, AlignmentSummary, CurveReport, HistogramData, LabeledScore, ScoringConfig, Vocab};
use rayon::prelude::*;

use crate::config::{EvalArgs, FromConfigFile, RunConfig, TransferArgs, DEFAULT_FNR_BUDGET};
use crate::error::{CliError, Result};
use crate::io::{read_vocab, Dataset};
use crate::report;

/// How a successful run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Success,
    /// Every configuration produced only undefined metrics.
    UndefinedOnly,
}

impl Outcome {
    pub fn exit_code(self) -> u8 {
        match self {
            Outcome::Success => 0,
            Outcome::UndefinedOnly => 3,
        }
    }
}

/// Runs `f` on a pool of `jobs` threads (0 = one per core).
pub fn with_pool<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Config(format!("cannot start {jobs} worker threads: {e}")))?;
    Ok(pool.install(f))
}

/// Labeled words of a whole dataset, one list per configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledRun {
    pub utterances: usize,
    pub summary: AlignmentSummary,
    pub labeled: Vec<Vec<LabeledScore>>,
    pub implicit_heads: usize,
    pub unmatched_references: usize,
}

pub fn label_dataset(ds: &Dataset, vocab: &Vocab, run: &RunConfig) -> Result<LabeledRun> {
    let scored: Vec<Result<_>> = ds
        .utterances
        .par_iter()
        .map(|u| {
            let reference = ds.references.get(&u.id).map_or("", String::as_str);
            score_utterance(&u.id, &u.steps, vocab, reference, u.duration_seconds, &run.pipeline, &run.configs)
                .map_err(|e| CliError::schema(&ds.posteriors_path, Some(u.line), format!("utterance {:?}: {e}", u.id)))
        })
        .collect();

    let mut out = LabeledRun {
        utterances: ds.utterances.len(),
        summary: AlignmentSummary { duration_seconds: Some(0.0), ..Default::default() },
        labeled: vec![Vec::new(); run.configs.len()],
        implicit_heads: 0,
        unmatched_references: ds.unmatched_references,
    };
    for r in scored {
        let r = r?;
        out.summary.merge(&r.summary);
        out.implicit_heads += r.implicit_heads;
        for (all, words) in out.labeled.iter_mut().zip(r.labeled) {
            all.extend(words);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigResult {
    pub config: ScoringConfig,
    pub report: CurveReport,
    pub histogram: HistogramData,
}

pub fn evaluate_configs(run: &LabeledRun, cfg: &RunConfig) -> Vec<ConfigResult> {
    cfg.configs
        .par_iter()
        .zip(run.labeled.par_iter())
        .map(|(&config, scores)| ConfigResult {
            config,
            report: evaluate(scores, cfg.ece_bins),
            histogram: histogram(scores, cfg.hist_bins).expect("bin count validated"),
        })
        .collect()
}

fn required(value: Option<PathBuf>, flag: &str) -> Result<PathBuf> {
    value.ok_or_else(|| CliError::Config(format!("--{flag} is required")))
}

/// Everything `eval` computes before writing.
#[derive(Debug, Clone)]
pub struct EvalOutput {
    pub run: RunConfig,
    pub labeled: LabeledRun,
    pub results: Vec<ConfigResult>,
}

impl EvalOutput {
    pub fn outcome(&self) -> Outcome {
        if self.results.iter().all(|r| r.report.all_undefined()) {
            Outcome::UndefinedOnly
        } else {
            Outcome::Success
        }
    }
}

pub fn compute_eval(posteriors: &Path, refs: &Path, vocab: &Vocab, run: RunConfig) -> Result<EvalOutput> {
    with_pool(run.jobs, || {
        let ds = Dataset::load(posteriors, refs, vocab, run.renormalize)?;
        let labeled = label_dataset(&ds, vocab, &run)?;
        let results = evaluate_configs(&labeled, &run);
        Ok(EvalOutput { run, labeled, results })
    })?
}

pub fn run_eval(args: EvalArgs) -> Result<Outcome> {
    let args = args.merged()?;
    let run = args.scoring.resolve()?;
    let posteriors = required(args.posteriors, "posteriors")?;
    let refs = required(args.refs, "refs")?;
    let vocab_path = required(args.vocab, "vocab")?;
    let out_dir = required(args.out_dir, "out-dir")?;
    let vocab = read_vocab(&vocab_path)?;

    let output = compute_eval(&posteriors, &refs, &vocab, run)?;
    let inputs = report::Inputs::eval(&posteriors, &refs, &vocab_path);
    report::write_eval_bundle(&out_dir, &inputs, &output)?;
    print!("{}", report::summary_table(&output.results));
    Ok(output.outcome())
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransferResult {
    pub config: ScoringConfig,
    pub transfer: Option<Transfer>,
    /// Why the transfer is undefined for this configuration.
    pub error: Option<String>,
}

#[derive(Debug, Clone)]
pub struct TransferOutput {
    pub run: RunConfig,
    pub fnr_budget: f64,
    pub calibration: LabeledRun,
    pub evaluation: LabeledRun,
    pub results: Vec<TransferResult>,
}

impl TransferOutput {
    pub fn outcome(&self) -> Outcome {
        if self.results.iter().all(|r| r.transfer.is_none()) {
            Outcome::UndefinedOnly
        } else {
            Outcome::Success
        }
    }
}

pub fn transfer_configs(calib: &LabeledRun, eval: &LabeledRun, run: &RunConfig, budget: f64) -> Vec<TransferResult> {
    run.configs
        .par_iter()
        .enumerate()
        .map(|(k, &config)| match tnr_transfer(&calib.labeled[k], &eval.labeled[k], budget) {
            Ok(t) => TransferResult { config, transfer: Some(t), error: None },
            Err(e) => TransferResult { config, transfer: None, error: Some(e.to_string()) },
        })
        .collect()
}

pub struct TransferInputs<'a> {
    pub calib_posteriors: &'a Path,
    pub calib_refs: &'a Path,
    pub eval_posteriors: &'a Path,
    pub eval_refs: &'a Path,
}

pub fn compute_transfer(inputs: &TransferInputs<'_>, vocab: &Vocab, run: RunConfig, budget: f64) -> Result<TransferOutput> {
    if !(budget > 0.0 && budget < 1.0) {
        return Err(CliError::Config(format!("fnr budget must be in (0, 1), got {budget}")));
    }
    with_pool(run.jobs, || {
        let calib = Dataset::load(inputs.calib_posteriors, inputs.calib_refs, vocab, run.renormalize)?;
        let eval = Dataset::load(inputs.eval_posteriors, inputs.eval_refs, vocab, run.renormalize)?;
        let calibration = label_dataset(&calib, vocab, &run)?;
        let evaluation = label_dataset(&eval, vocab, &run)?;
        let results = transfer_configs(&calibration, &evaluation, &run, budget);
        Ok(TransferOutput { run, fnr_budget: budget, calibration, evaluation, results })
    })?
}

pub fn run_transfer(args: TransferArgs) -> Result<Outcome> {
    let args = args.merged()?;
    let run = args.scoring.resolve()?;
    let calib_posteriors = required(args.calib_posteriors, "calib-posteriors")?;
    let calib_refs = required(args.calib_refs, "calib-refs")?;
    let eval_posteriors = required(args.eval_posteriors, "eval-posteriors")?;
    let eval_refs = required(args.eval_refs, "eval-refs")?;
    let vocab_path = required(args.vocab, "vocab")?;
    let out_dir = required(args.out_dir, "out-dir")?;
    let vocab = read_vocab(&vocab_path)?;

    let inputs = TransferInputs {
        calib_posteriors: &calib_posteriors,
        calib_refs: &calib_refs,
        eval_posteriors: &eval_posteriors,
        eval_refs: &eval_refs,
    };
    let output = compute_transfer(&inputs, &vocab, run, args.fnr_budget.unwrap_or(DEFAULT_FNR_BUDGET))?;
    let echo = report::Inputs::transfer(&inputs, &vocab_path);
    report::write_transfer_bundle(&out_dir, &echo, &output)?;
    print!("{}", report::transfer_table(&output.results));
    Ok(output.outcome())
}
