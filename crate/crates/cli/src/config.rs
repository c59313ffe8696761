//! Command line arguments and the flat TOML config file.
//!
//! Every flag has a config-file key of the same name with `-` replaced by
//! `_`. Keys for other subcommands are ignored, unknown keys are rejected,
//! and a value given on the command line always wins.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use entconf::pipeline::{recommended, DEFAULT_ALPHAS};
use entconf::{AggKind, BlankPolicy, DecodeMode, MeasureConfig, MeasureKind, Normalization, PipelineOptions, ScoringConfig};
use serde::{Deserialize, Deserializer};

use crate::error::{CliError, Result};

pub const DEFAULT_ECE_BINS: usize = entconf::metrics::DEFAULT_ECE_BINS;
pub const DEFAULT_HIST_BINS: usize = 20;
pub const DEFAULT_FNR_BUDGET: f64 = 0.05;

#[derive(Parser, Debug)]
#[command(name = "entconf", version, about = "Entropy-based word confidence for greedy CTC/RNN-T decoding")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Score a dataset under a sweep of confidence measures and evaluate each one
    Eval(EvalArgs),
    /// Pick a threshold on a calibration set and report TNR on an evaluation set
    Transfer(TransferArgs),
    /// Write a synthetic dataset with known word correctness
    Synth(SynthArgs),
    /// Compare fast metric and alignment paths against brute-force oracles
    OracleCheck(OracleArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum ModeArg {
    Ctc,
    Rnnt,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum MeasureArg {
    MaxProb,
    Gibbs,
    Tsallis,
    Renyi,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum NormArg {
    Lin,
    Exp,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum AggArg {
    Mean,
    Min,
    Prod,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum BlankArg {
    Exclude,
    Include,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum FormatArg {
    Ndjson,
    Binary,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum PresetArg {
    Default,
    Overconfident,
}

impl From<ModeArg> for DecodeMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Ctc => DecodeMode::Ctc,
            ModeArg::Rnnt => DecodeMode::Rnnt,
        }
    }
}

impl From<MeasureArg> for MeasureKind {
    fn from(m: MeasureArg) -> Self {
        match m {
            MeasureArg::MaxProb => MeasureKind::MaxProb,
            MeasureArg::Gibbs => MeasureKind::Gibbs,
            MeasureArg::Tsallis => MeasureKind::Tsallis,
            MeasureArg::Renyi => MeasureKind::Renyi,
        }
    }
}

impl From<NormArg> for Normalization {
    fn from(n: NormArg) -> Self {
        match n {
            NormArg::Lin => Normalization::Linear,
            NormArg::Exp => Normalization::Exponential,
        }
    }
}

impl From<AggArg> for AggKind {
    fn from(a: AggArg) -> Self {
        match a {
            AggArg::Mean => AggKind::Mean,
            AggArg::Min => AggKind::Min,
            AggArg::Prod => AggKind::Prod,
        }
    }
}

impl From<BlankArg> for BlankPolicy {
    fn from(b: BlankArg) -> Self {
        match b {
            BlankArg::Exclude => BlankPolicy::Exclude,
            BlankArg::Include => BlankPolicy::Include,
        }
    }
}

/// Accepts either a single value or an array in the config file.
fn one_or_many<'de, D, T>(d: D) -> std::result::Result<Vec<T>, D::Error>
where
    D: Deserializer<'de>,
    T: Deserialize<'de>,
{
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum OneOrMany<T> {
        One(T),
        Many(Vec<T>),
    }
    Ok(match OneOrMany::deserialize(d)? {
        OneOrMany::One(x) => vec![x],
        OneOrMany::Many(v) => v,
    })
}

/// Options shared by `eval` and `transfer`. List flags take comma-separated
/// values or may be repeated; an empty list means the default sweep.
#[derive(Args, Debug, Clone, Default, Deserialize)]
#[serde(default)]
pub struct ScoringArgs {
    /// Decoder type that produced the posteriors [default: ctc]
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    /// Measures to sweep [default: all]
    #[arg(long, value_enum, value_delimiter = ',')]
    #[serde(deserialize_with = "one_or_many")]
    pub measure: Vec<MeasureArg>,
    /// Normalizations to sweep; max_prob is linear only [default: lin,exp]
    #[arg(long, value_enum, value_delimiter = ',')]
    #[serde(deserialize_with = "one_or_many")]
    pub norm: Vec<NormArg>,
    /// Entropy indices for Tsallis and Renyi [default: 0.25,0.3333333333333333,0.5]
    #[arg(long, value_delimiter = ',')]
    #[serde(deserialize_with = "one_or_many")]
    pub alpha: Vec<f64>,
    /// Frame-to-unit and unit-to-word aggregations [default: mean,min,prod]
    #[arg(long, value_enum, value_delimiter = ',')]
    #[serde(deserialize_with = "one_or_many")]
    pub agg: Vec<AggArg>,
    /// Whether blank frames contribute to unit confidence [default: exclude]
    #[arg(long, value_enum)]
    pub blank: Option<BlankArg>,
    /// Equal-width bins for ECE [default: 10]
    #[arg(long)]
    pub ece_bins: Option<usize>,
    /// Bins for the confidence histograms [default: 20]
    #[arg(long)]
    pub hist_bins: Option<usize>,
    /// Compare words case-sensitively [default: false]
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub keep_case: Option<bool>,
    /// Rescale each posterior row to sum to one before validation [default: false]
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub renormalize: Option<bool>,
    /// Worker threads; 0 uses all cores [default: 0]
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Args, Debug, Clone, Default, Deserialize)]
#[serde(default)]
pub struct EvalArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub scoring: ScoringArgs,
    /// Posterior streams, NDJSON or CNF1 binary
    #[arg(long)]
    pub posteriors: Option<PathBuf>,
    /// Reference transcripts, `id<TAB>words`
    #[arg(long)]
    pub refs: Option<PathBuf>,
    /// Vocabulary JSON
    #[arg(long)]
    pub vocab: Option<PathBuf>,
    /// Directory for the report bundle
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Flat TOML file with defaults for any flag
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Default, Deserialize)]
#[serde(default)]
pub struct TransferArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub scoring: ScoringArgs,
    /// Calibration posteriors
    #[arg(long)]
    pub calib_posteriors: Option<PathBuf>,
    /// Calibration references
    #[arg(long)]
    pub calib_refs: Option<PathBuf>,
    /// Evaluation posteriors
    #[arg(long)]
    pub eval_posteriors: Option<PathBuf>,
    /// Evaluation references; may be empty for noise sets
    #[arg(long)]
    pub eval_refs: Option<PathBuf>,
    /// Vocabulary JSON shared by both sets
    #[arg(long)]
    pub vocab: Option<PathBuf>,
    /// Largest share of correct calibration words the threshold may reject [default: 0.05]
    #[arg(long)]
    pub fnr_budget: Option<f64>,
    /// Directory for transfer.json and transfer.tsv
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Flat TOML file with defaults for any flag
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Default, Deserialize)]
#[serde(default)]
pub struct SynthArgs {
    /// Directory for posteriors, refs.tsv and vocab.json
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Posterior file format [default: ndjson]
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
    /// Base preset [default: default]
    #[arg(long, value_enum)]
    pub preset: Option<PresetArg>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    #[arg(long)]
    pub vocab_size: Option<usize>,
    #[arg(long)]
    pub n_utterances: Option<usize>,
    #[arg(long)]
    pub words_per_utterance: Option<usize>,
    #[arg(long)]
    pub error_rate: Option<f64>,
    #[arg(long)]
    pub sharpness: Option<f64>,
    /// Empty references, so every emitted word is an insertion
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub pure_noise: Option<bool>,
    /// Worker threads; 0 uses all cores [default: 0]
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Flat TOML file with defaults for any flag
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Default, Deserialize)]
#[serde(default)]
pub struct OracleArgs {
    #[arg(long)]
    pub seed: Option<u64>,
    /// Random datasets per check [default: 100]
    #[arg(long)]
    pub cases: Option<usize>,
    /// Flat TOML file with defaults for any flag
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

const KNOWN_KEYS: &[&str] = &[
    "mode", "measure", "norm", "alpha", "agg", "blank", "ece_bins", "hist_bins", "keep_case",
    "renormalize", "jobs", "posteriors", "refs", "vocab", "out_dir", "calib_posteriors", "calib_refs",
    "eval_posteriors", "eval_refs", "fnr_budget", "format", "preset", "seed", "vocab_size",
    "n_utterances", "words_per_utterance", "error_rate", "sharpness", "pure_noise", "cases",
];

trait Fill {
    fn fill(&mut self, file: Self);
}

impl<T> Fill for Option<T> {
    fn fill(&mut self, file: Self) {
        if self.is_none() {
            *self = file;
        }
    }
}

impl<T> Fill for Vec<T> {
    fn fill(&mut self, file: Self) {
        if self.is_empty() {
            *self = file;
        }
    }
}

macro_rules! fill_fields {
    ($cli:expr, $file:expr; $($f:ident),* $(,)?) => { $( $cli.$f.fill($file.$f); )* };
}

/// Command-line arguments that can take defaults from a config file.
pub trait FromConfigFile: Sized + for<'de> Deserialize<'de> {
    fn config_path(&self) -> Option<&Path>;
    fn fill_from(&mut self, file: Self);

    /// Fills unset fields from `--config`, if given.
    fn merged(mut self) -> Result<Self> {
        let Some(path) = self.config_path().map(Path::to_path_buf) else {
            return Ok(self);
        };
        let text = std::fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
        let table: toml::Table = toml::from_str(&text).map_err(|e| toml_error(&path, &text, e))?;
        let known: BTreeSet<&str> = KNOWN_KEYS.iter().copied().collect();
        if let Some(key) = table.keys().find(|k| !known.contains(k.as_str())) {
            let line = text.lines().position(|l| l.trim_start().starts_with(key.as_str())).map(|i| i + 1);
            return Err(CliError::schema(&path, line, format!("unknown key {key:?}")));
        }
        let file: Self = table.try_into().map_err(|e| toml_error(&path, &text, e))?;
        self.fill_from(file);
        Ok(self)
    }
}

fn toml_error(path: &Path, text: &str, e: toml::de::Error) -> CliError {
    let line = e.span().map(|s| text[..s.start.min(text.len())].lines().count().max(1));
    CliError::schema(path, line, e.message().to_string())
}

impl ScoringArgs {
    fn fill_from(&mut self, f: Self) {
        fill_fields!(self, f; mode, measure, norm, alpha, agg, blank, ece_bins, hist_bins, keep_case, renormalize, jobs);
    }
}

impl FromConfigFile for EvalArgs {
    fn config_path(&self) -> Option<&Path> {
        self.config.as_deref()
    }
    fn fill_from(&mut self, f: Self) {
        self.scoring.fill_from(f.scoring);
        fill_fields!(self, f; posteriors, refs, vocab, out_dir);
    }
}

impl FromConfigFile for TransferArgs {
    fn config_path(&self) -> Option<&Path> {
        self.config.as_deref()
    }
    fn fill_from(&mut self, f: Self) {
        self.scoring.fill_from(f.scoring);
        fill_fields!(self, f; calib_posteriors, calib_refs, eval_posteriors, eval_refs, vocab, fnr_budget, out_dir);
    }
}

impl FromConfigFile for SynthArgs {
    fn config_path(&self) -> Option<&Path> {
        self.config.as_deref()
    }
    fn fill_from(&mut self, f: Self) {
        fill_fields!(self, f; out_dir, format, preset, seed, mode, vocab_size, n_utterances,
            words_per_utterance, error_rate, sharpness, pure_noise, jobs);
    }
}

impl FromConfigFile for OracleArgs {
    fn config_path(&self) -> Option<&Path> {
        self.config.as_deref()
    }
    fn fill_from(&mut self, f: Self) {
        fill_fields!(self, f; seed, cases);
    }
}

/// Resolved options for scoring and evaluating a dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub pipeline: PipelineOptions,
    pub configs: Vec<ScoringConfig>,
    pub ece_bins: usize,
    pub hist_bins: usize,
    pub renormalize: bool,
    pub jobs: usize,
}

impl ScoringArgs {
    pub fn resolve(&self) -> Result<RunConfig> {
        let mode = self.mode.map_or(DecodeMode::Ctc, Into::into);
        let pipeline = PipelineOptions {
            mode,
            blank: self.blank.map_or(BlankPolicy::Exclude, Into::into),
            lowercase: !self.keep_case.unwrap_or(false),
        };
        let ece_bins = self.ece_bins.unwrap_or(DEFAULT_ECE_BINS);
        let hist_bins = self.hist_bins.unwrap_or(DEFAULT_HIST_BINS);
        if ece_bins == 0 || hist_bins == 0 {
            return Err(CliError::Config("bin counts must be at least 1".into()));
        }
        Ok(RunConfig {
            pipeline,
            configs: self.sweep()?,
            ece_bins,
            hist_bins,
            renormalize: self.renormalize.unwrap_or(false),
            jobs: self.jobs.unwrap_or(0),
        })
    }

    /// Cartesian product of the requested measures, normalizations, alphas
    /// and aggregations. Max-probability only exists in linear form and
    /// ignores alpha; the recommended configuration is always appended.
    fn sweep(&self) -> Result<Vec<ScoringConfig>> {
        let kinds: Vec<MeasureKind> = if self.measure.is_empty() {
            MeasureKind::ALL.to_vec()
        } else {
            self.measure.iter().map(|&m| m.into()).collect()
        };
        let norms: Vec<Normalization> = if self.norm.is_empty() {
            vec![Normalization::Linear, Normalization::Exponential]
        } else {
            self.norm.iter().map(|&n| n.into()).collect()
        };
        let alphas: Vec<f64> = if self.alpha.is_empty() { DEFAULT_ALPHAS.to_vec() } else { self.alpha.clone() };
        let aggs: Vec<AggKind> = if self.agg.is_empty() {
            AggKind::ALL.to_vec()
        } else {
            self.agg.iter().map(|&a| a.into()).collect()
        };

        let mut measures: Vec<MeasureConfig> = Vec::new();
        for &kind in &kinds {
            for &norm in &norms {
                if kind == MeasureKind::MaxProb && norm != Normalization::Linear {
                    continue;
                }
                let candidates: Vec<Option<f64>> =
                    if kind.is_parametric() { alphas.iter().map(|&a| Some(a)).collect() } else { vec![None] };
                for alpha in candidates {
                    let m = MeasureConfig::new(kind, norm, alpha).map_err(|e| CliError::Config(e.to_string()))?;
                    if !measures.contains(&m) {
                        measures.push(m);
                    }
                }
            }
        }
        if measures.is_empty() {
            return Err(CliError::Config("the requested measures and normalizations give no configuration".into()));
        }
        let mut configs = Vec::new();
        for &measure in &measures {
            for &agg in &aggs {
                let c = ScoringConfig { measure, agg };
                if !configs.contains(&c) {
                    configs.push(c);
                }
            }
        }
        if !configs.contains(&recommended()) {
            configs.push(recommended());
        }
        Ok(configs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Command {
        let mut full = vec!["entconf"];
        full.extend_from_slice(args);
        Cli::try_parse_from(full).unwrap().command
    }

    #[test]
    fn default_sweep_has_45_configurations() {
        let Command::Eval(a) = parse(&["eval"]) else { panic!() };
        let run = a.scoring.resolve().unwrap();
        assert_eq!(run.configs, entconf::pipeline::default_sweep());
        assert_eq!(run.ece_bins, 10);
        assert!(run.pipeline.lowercase);
    }

    #[test]
    fn narrow_sweep_still_includes_recommended() {
        let Command::Eval(a) = parse(&["eval", "--measure", "max_prob", "--agg", "prod", "--alpha", "0.5"]) else {
            panic!()
        };
        let labels: Vec<String> = a.scoring.resolve().unwrap().configs.iter().map(|c| c.label()).collect();
        assert_eq!(labels, ["max_prob_lin_prod", "tsallis_exp_a0.3333_min"]);
    }

    #[test]
    fn bad_alpha_is_a_config_error() {
        let Command::Eval(a) = parse(&["eval", "--measure", "renyi", "--alpha", "1"]) else { panic!() };
        let err = a.scoring.resolve().unwrap_err();
        assert_eq!(err.exit_code(), 2);
        let Command::Eval(a) = parse(&["eval", "--measure", "max_prob", "--norm", "exp"]) else { panic!() };
        assert!(a.scoring.resolve().is_err());
    }

    #[test]
    fn command_line_wins_over_config_file() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("run.toml");
        std::fs::write(&cfg, "mode = \"rnnt\"\nagg = \"min\"\nalpha = [0.25, 0.5]\nece_bins = 15\nkeep_case = true\nout_dir = \"x\"\n")
            .unwrap();
        let cfg_s = cfg.to_str().unwrap();
        let Command::Eval(a) = parse(&["eval", "--config", cfg_s, "--ece-bins", "5", "--keep-case=false"]) else {
            panic!()
        };
        let a = a.merged().unwrap();
        assert_eq!(a.scoring.mode, Some(ModeArg::Rnnt));
        assert_eq!(a.scoring.agg, vec![AggArg::Min]);
        assert_eq!(a.scoring.alpha, vec![0.25, 0.5]);
        assert_eq!(a.scoring.ece_bins, Some(5));
        assert_eq!(a.scoring.keep_case, Some(false));
        assert_eq!(a.out_dir, Some(PathBuf::from("x")));
    }

    #[test]
    fn unknown_config_key_reports_line() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("run.toml");
        std::fs::write(&cfg, "mode = \"ctc\"\nbogus = 1\n").unwrap();
        let Command::Eval(a) = parse(&["eval", "--config", cfg.to_str().unwrap()]) else { panic!() };
        let err = a.merged().unwrap_err();
        assert!(matches!(err, CliError::Schema { line: Some(2), .. }), "{err}");
        std::fs::write(&cfg, "mode = \"beam\"\n").unwrap();
        let Command::Eval(a) = parse(&["eval", "--config", cfg.to_str().unwrap()]) else { panic!() };
        assert_eq!(a.merged().unwrap_err().exit_code(), 2);
    }
}
