//! Report bundles.
//!
//! `eval` writes into its output directory:
//!
//! ```text
//! report.json              config echo, alignment summary, warnings, every CurveReport
//! summary.tsv              one row per configuration
//! words/<label>.csv        utterance_id,word,confidence,label,error_kind
//! histograms/<label>.csv   bin_lo,bin_hi,count_correct,count_incorrect
//! ```
//!
//! `transfer` writes `transfer.json` and `transfer.tsv`. Floats use the
//! shortest representation that round-trips, and all orderings are fixed, so
//! identical inputs give byte-identical files.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use entconf::{AlignmentSummary, BlankPolicy, DecodeMode, LabeledScore, ScoringConfig};
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{CliError, Result};
use crate::run::{ConfigResult, EvalOutput, LabeledRun, TransferInputs, TransferOutput, TransferResult};

const TOOL: &str = "entconf";
const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Input paths as given on the command line, echoed into reports.
#[derive(Debug, Clone, Serialize)]
pub struct Inputs(BTreeMap<&'static str, String>);

impl Inputs {
    pub fn eval(posteriors: &Path, refs: &Path, vocab: &Path) -> Self {
        Self(BTreeMap::from([
            ("posteriors", posteriors.display().to_string()),
            ("refs", refs.display().to_string()),
            ("vocab", vocab.display().to_string()),
        ]))
    }

    pub fn transfer(t: &TransferInputs<'_>, vocab: &Path) -> Self {
        Self(BTreeMap::from([
            ("calib_posteriors", t.calib_posteriors.display().to_string()),
            ("calib_refs", t.calib_refs.display().to_string()),
            ("eval_posteriors", t.eval_posteriors.display().to_string()),
            ("eval_refs", t.eval_refs.display().to_string()),
            ("vocab", vocab.display().to_string()),
        ]))
    }
}

fn mode_name(m: DecodeMode) -> &'static str {
    match m {
        DecodeMode::Ctc => "ctc",
        DecodeMode::Rnnt => "rnnt",
    }
}

fn blank_name(b: BlankPolicy) -> &'static str {
    match b {
        BlankPolicy::Exclude => "exclude",
        BlankPolicy::Include => "include",
    }
}

#[derive(Serialize)]
struct ConfigEcho<'a> {
    mode: &'static str,
    blank_policy: &'static str,
    lowercase: bool,
    renormalize: bool,
    ece_bins: usize,
    hist_bins: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    fnr_budget: Option<f64>,
    inputs: &'a Inputs,
    configurations: Vec<String>,
}

impl<'a> ConfigEcho<'a> {
    fn new(run: &RunConfig, inputs: &'a Inputs, fnr_budget: Option<f64>) -> Self {
        Self {
            mode: mode_name(run.pipeline.mode),
            blank_policy: blank_name(run.pipeline.blank),
            lowercase: run.pipeline.lowercase,
            renormalize: run.renormalize,
            ece_bins: run.ece_bins,
            hist_bins: run.hist_bins,
            fnr_budget,
            inputs,
            configurations: run.configs.iter().map(ScoringConfig::label).collect(),
        }
    }
}

#[derive(Serialize)]
struct AlignmentEcho {
    utterances: usize,
    reference_words: usize,
    matches: usize,
    substitutions: usize,
    insertions: usize,
    deletions: usize,
    wer: Option<f64>,
    duration_seconds: Option<f64>,
    /// Word insertions per second.
    wis: Option<f64>,
}

impl AlignmentEcho {
    fn new(utterances: usize, s: &AlignmentSummary) -> Self {
        Self {
            utterances,
            reference_words: s.reference_words(),
            matches: s.matches,
            substitutions: s.substitutions,
            insertions: s.insertions,
            deletions: s.deletions,
            wer: s.wer(),
            duration_seconds: s.duration_seconds,
            wis: s.wis(),
        }
    }
}

#[derive(Serialize)]
struct Warnings {
    blank_policy: &'static str,
    implicit_word_heads: usize,
    unmatched_references: usize,
    /// Configurations whose NCE clamped at least one score.
    nce_clamped: BTreeMap<String, usize>,
    /// Configurations with no defined metric (single-class data).
    undefined_metrics: Vec<String>,
}

#[derive(Serialize)]
struct Identity {
    label: String,
    measure: &'static str,
    normalization: &'static str,
    alpha: Option<f64>,
    aggregation: &'static str,
}

impl From<ScoringConfig> for Identity {
    fn from(c: ScoringConfig) -> Self {
        Self {
            label: c.label(),
            measure: c.measure.kind.name(),
            normalization: c.measure.normalization.name(),
            alpha: c.measure.kind.is_parametric().then_some(c.measure.alpha),
            aggregation: c.agg.name(),
        }
    }
}

#[derive(Serialize)]
struct Histogram<'a> {
    edges: &'a [f64],
    correct: &'a [usize],
    incorrect: &'a [usize],
}

#[derive(Serialize)]
struct ConfigEntry<'a> {
    #[serde(flatten)]
    id: Identity,
    words_csv: String,
    histogram_csv: String,
    n_correct: usize,
    n_incorrect: usize,
    auc_roc: Option<f64>,
    auc_pr: Option<f64>,
    auc_nt: Option<f64>,
    nce: Option<f64>,
    nce_clamped: usize,
    ece: Option<f64>,
    auc_yc: Option<f64>,
    max_yc: Option<f64>,
    std_yc: Option<f64>,
    spectrum_flag: Option<bool>,
    histogram: Histogram<'a>,
}

#[derive(Serialize)]
struct EvalReport<'a> {
    tool: &'static str,
    version: &'static str,
    config: ConfigEcho<'a>,
    alignment: AlignmentEcho,
    warnings: Warnings,
    configurations: Vec<ConfigEntry<'a>>,
}

fn warnings(labeled: &LabeledRun, run: &RunConfig, results: &[ConfigResult]) -> Warnings {
    Warnings {
        blank_policy: blank_name(run.pipeline.blank),
        implicit_word_heads: labeled.implicit_heads,
        unmatched_references: labeled.unmatched_references,
        nce_clamped: results
            .iter()
            .filter(|r| r.report.nce_clamped > 0)
            .map(|r| (r.config.label(), r.report.nce_clamped))
            .collect(),
        undefined_metrics: results
            .iter()
            .filter(|r| r.report.all_undefined())
            .map(|r| r.config.label())
            .collect(),
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| CliError::io(path, e))
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(&row).expect("in-memory write");
    }
    w.into_inner().expect("in-memory write")
}

pub fn words_csv(scores: &[LabeledScore]) -> Vec<u8> {
    csv_bytes(
        &["utterance_id", "word", "confidence", "label", "error_kind"],
        scores.iter().map(|s| {
            vec![
                s.utterance_id.clone(),
                s.word.clone(),
                s.confidence.to_string(),
                s.label.name().to_string(),
                s.error_kind.name().to_string(),
            ]
        }),
    )
}

pub fn histogram_csv(h: &entconf::HistogramData) -> Vec<u8> {
    csv_bytes(
        &["bin_lo", "bin_hi", "count_correct", "count_incorrect"],
        (0..h.correct.len()).map(|b| {
            vec![
                h.edges[b].to_string(),
                h.edges[b + 1].to_string(),
                h.correct[b].to_string(),
                h.incorrect[b].to_string(),
            ]
        }),
    )
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.4}"))
}

fn flag_cell(v: Option<bool>) -> String {
    v.map_or_else(|| "-".to_string(), |b| b.to_string())
}

const SUMMARY_COLUMNS: [&str; 10] =
    ["configuration", "auc_roc", "auc_pr", "auc_nt", "nce", "ece", "auc_yc", "max_yc", "std_yc", "spectrum_flag"];

fn summary_rows(results: &[ConfigResult]) -> Vec<[String; 10]> {
    results
        .iter()
        .map(|r| {
            let m = &r.report;
            [
                r.config.label(),
                cell(m.auc_roc),
                cell(m.auc_pr),
                cell(m.auc_nt),
                cell(m.nce),
                cell(m.ece),
                cell(m.auc_yc),
                cell(m.max_yc),
                cell(m.std_yc),
                flag_cell(m.spectrum_flag),
            ]
        })
        .collect()
}

fn aligned_table<const N: usize>(header: [&str; N], rows: &[[String; N]]) -> String {
    let mut widths = header.map(str::len);
    for row in rows {
        for (w, c) in widths.iter_mut().zip(row) {
            *w = (*w).max(c.len());
        }
    }
    let mut out = String::new();
    let mut line = |cells: &mut dyn Iterator<Item = &str>| {
        let mut first = true;
        for (c, w) in cells.zip(widths) {
            if first {
                let _ = write!(out, "{c:<w$}");
                first = false;
            } else {
                let _ = write!(out, "  {c:>w$}");
            }
        }
        out.push('\n');
    };
    line(&mut header.iter().copied());
    for row in rows {
        line(&mut row.iter().map(String::as_str));
    }
    out
}

/// Fixed-width table of the headline metrics, four decimals, `-` for undefined.
pub fn summary_table(results: &[ConfigResult]) -> String {
    aligned_table(SUMMARY_COLUMNS, &summary_rows(results))
}

fn tsv<const N: usize>(header: [&str; N], rows: &[[String; N]]) -> String {
    let mut out = header.join("\t");
    out.push('\n');
    for row in rows {
        out.push_str(&row.join("\t"));
        out.push('\n');
    }
    out
}

pub fn write_eval_bundle(out_dir: &Path, inputs: &Inputs, output: &EvalOutput) -> Result<()> {
    let EvalOutput { run, labeled, results } = output;
    let words_dir = out_dir.join("words");
    let hist_dir = out_dir.join("histograms");
    create_dir(&words_dir)?;
    create_dir(&hist_dir)?;

    let mut entries = Vec::with_capacity(results.len());
    for (r, scores) in results.iter().zip(&labeled.labeled) {
        let label = r.config.label();
        let words_rel = format!("words/{label}.csv");
        let hist_rel = format!("histograms/{label}.csv");
        let path = out_dir.join(&words_rel);
        fs::write(&path, words_csv(scores)).map_err(|e| CliError::io(&path, e))?;
        let path = out_dir.join(&hist_rel);
        fs::write(&path, histogram_csv(&r.histogram)).map_err(|e| CliError::io(&path, e))?;

        let m = &r.report;
        entries.push(ConfigEntry {
            id: r.config.into(),
            words_csv: words_rel,
            histogram_csv: hist_rel,
            n_correct: m.n_correct,
            n_incorrect: m.n_incorrect,
            auc_roc: m.auc_roc,
            auc_pr: m.auc_pr,
            auc_nt: m.auc_nt,
            nce: m.nce,
            nce_clamped: m.nce_clamped,
            ece: m.ece,
            auc_yc: m.auc_yc,
            max_yc: m.max_yc,
            std_yc: m.std_yc,
            spectrum_flag: m.spectrum_flag,
            histogram: Histogram { edges: &r.histogram.edges, correct: &r.histogram.correct, incorrect: &r.histogram.incorrect },
        });
    }

    let report = EvalReport {
        tool: TOOL,
        version: VERSION,
        config: ConfigEcho::new(run, inputs, None),
        alignment: AlignmentEcho::new(labeled.utterances, &labeled.summary),
        warnings: warnings(labeled, run, results),
        configurations: entries,
    };
    write_file(&out_dir.join("report.json"), &to_json(&report))?;
    write_file(&out_dir.join("summary.tsv"), &tsv(SUMMARY_COLUMNS, &summary_rows(results)))
}

#[derive(Serialize)]
struct TransferEntry {
    #[serde(flatten)]
    id: Identity,
    tau: Option<f64>,
    calibration_fnr: Option<f64>,
    tnr: Option<f64>,
    degenerate: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    undefined_reason: Option<String>,
}

#[derive(Serialize)]
struct TransferWarnings {
    blank_policy: &'static str,
    implicit_word_heads: usize,
    unmatched_references: usize,
    /// Configurations where only a zero threshold meets the budget.
    degenerate: Vec<String>,
}

#[derive(Serialize)]
struct TransferReport<'a> {
    tool: &'static str,
    version: &'static str,
    config: ConfigEcho<'a>,
    calibration: AlignmentEcho,
    evaluation: AlignmentEcho,
    warnings: TransferWarnings,
    configurations: Vec<TransferEntry>,
}

const TRANSFER_COLUMNS: [&str; 5] = ["configuration", "tau", "calibration_fnr", "tnr", "degenerate"];

fn transfer_rows(results: &[TransferResult]) -> Vec<[String; 5]> {
    results
        .iter()
        .map(|r| {
            let t = r.transfer.as_ref();
            [
                r.config.label(),
                cell(t.map(|t| t.tau)),
                cell(t.map(|t| t.calibration_fnr)),
                cell(t.map(|t| t.tnr)),
                flag_cell(t.map(|t| t.degenerate)),
            ]
        })
        .collect()
}

pub fn transfer_table(results: &[TransferResult]) -> String {
    aligned_table(TRANSFER_COLUMNS, &transfer_rows(results))
}

pub fn write_transfer_bundle(out_dir: &Path, inputs: &Inputs, output: &TransferOutput) -> Result<()> {
    create_dir(out_dir)?;
    let TransferOutput { run, fnr_budget, calibration, evaluation, results } = output;
    let report = TransferReport {
        tool: TOOL,
        version: VERSION,
        config: ConfigEcho::new(run, inputs, Some(*fnr_budget)),
        calibration: AlignmentEcho::new(calibration.utterances, &calibration.summary),
        evaluation: AlignmentEcho::new(evaluation.utterances, &evaluation.summary),
        warnings: TransferWarnings {
            blank_policy: blank_name(run.pipeline.blank),
            implicit_word_heads: calibration.implicit_heads + evaluation.implicit_heads,
            unmatched_references: calibration.unmatched_references + evaluation.unmatched_references,
            degenerate: results
                .iter()
                .filter(|r| r.transfer.is_some_and(|t| t.degenerate))
                .map(|r| r.config.label())
                .collect(),
        },
        configurations: results
            .iter()
            .map(|r| TransferEntry {
                id: r.config.into(),
                tau: r.transfer.map(|t| t.tau),
                calibration_fnr: r.transfer.map(|t| t.calibration_fnr),
                tnr: r.transfer.map(|t| t.tnr),
                degenerate: r.transfer.map(|t| t.degenerate),
                undefined_reason: r.error.clone(),
            })
            .collect(),
    };
    write_file(&out_dir.join("transfer.json"), &to_json(&report))?;
    write_file(&out_dir.join("transfer.tsv"), &tsv(TRANSFER_COLUMNS, &transfer_rows(results)))
}
