//! `synth`: write a generated corpus in the formats `eval` reads.

use std::fs;
use std::path::{Path, PathBuf};

use entconf::synth::{generate_utterance, SynthConfig, SynthUtterance};
use entconf::Vocab;
use rayon::prelude::*;

use crate::config::{FormatArg, FromConfigFile, PresetArg, SynthArgs};
use crate::error::{CliError, Result};
use crate::io::{write_binary, write_ndjson, write_references, write_vocab, RecordRef};
use crate::run::{with_pool, Outcome};

/// Files written by [`write_corpus`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SynthFiles {
    pub posteriors: PathBuf,
    pub refs: PathBuf,
    pub vocab: PathBuf,
}

impl SynthArgs {
    pub fn synth_config(&self) -> Result<SynthConfig> {
        let mut cfg = match self.preset.unwrap_or(PresetArg::Default) {
            PresetArg::Default => SynthConfig::default(),
            PresetArg::Overconfident => SynthConfig::overconfident(),
        };
        if let Some(m) = self.mode {
            cfg.mode = m.into();
        }
        macro_rules! set {
            ($($f:ident),*) => { $( if let Some(v) = self.$f { cfg.$f = v; } )* };
        }
        set!(seed, vocab_size, n_utterances, words_per_utterance, error_rate, sharpness, pure_noise);
        cfg.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(cfg)
    }
}

/// Generates utterances in parallel; the result equals serial generation.
pub fn generate_parallel(cfg: &SynthConfig, vocab: &Vocab) -> Vec<SynthUtterance> {
    (0..cfg.n_utterances)
        .into_par_iter()
        .map(|i| generate_utterance(cfg, vocab, i))
        .collect()
}

pub fn write_corpus(
    out_dir: &Path,
    format: FormatArg,
    vocab: &Vocab,
    utterances: &[SynthUtterance],
) -> Result<SynthFiles> {
    fs::create_dir_all(out_dir).map_err(|e| CliError::io(out_dir, e))?;
    let records = utterances.iter().map(|u| RecordRef {
        id: &u.id,
        steps: &u.steps,
        duration_seconds: Some(u.duration_seconds),
    });
    let posteriors = match format {
        FormatArg::Ndjson => {
            let p = out_dir.join("posteriors.ndjson");
            write_ndjson(&p, records)?;
            p
        }
        FormatArg::Binary => {
            let p = out_dir.join("posteriors.bin");
            write_binary(&p, vocab.size(), records)?;
            p
        }
    };
    let refs = out_dir.join("refs.tsv");
    write_references(&refs, utterances.iter().map(|u| (u.id.as_str(), u.reference.join(" "))))?;
    let vocab_path = out_dir.join("vocab.json");
    write_vocab(&vocab_path, vocab)?;
    Ok(SynthFiles { posteriors, refs, vocab: vocab_path })
}

pub fn run_synth(args: SynthArgs) -> Result<Outcome> {
    let args = args.merged()?;
    let cfg = args.synth_config()?;
    let out_dir = args.out_dir.clone().ok_or_else(|| CliError::Config("--out-dir is required".into()))?;
    let vocab = cfg.vocab();
    let utterances = with_pool(args.jobs.unwrap_or(0), || generate_parallel(&cfg, &vocab))?;
    let files = write_corpus(&out_dir, args.format.unwrap_or(FormatArg::Ndjson), &vocab, &utterances)?;
    let words: usize = utterances.iter().map(|u| u.hypothesis.len()).sum();
    println!(
        "wrote {} utterances, {words} hypothesis words, V = {} to {}",
        utterances.len(),
        vocab.size(),
        files.posteriors.display()
    );
    Ok(Outcome::Success)
}
