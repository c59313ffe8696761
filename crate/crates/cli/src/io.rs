//! Input and output formats.
//!
//! * Posteriors as NDJSON, one utterance per line:
//!   `{"id": str, "steps": [[p_0, ..., p_{V-1}], ...], "duration": seconds?}`.
//! * Posteriors as a `CNF1` binary container, all integers and floats
//!   little-endian: the magic, `u32` V, then per utterance `u32` id length,
//!   id bytes (UTF-8), `f32` duration (NaN when unknown), `u32` step count
//!   and `steps * V` `f32` probabilities.
//! * Vocabulary JSON: `{"size": V, "blank_id": int, "tokens": [{"id", "text", "word_begin"}]}`.
//! * References as TSV: `id<TAB>words`, one utterance per line.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use entconf::{ProbDist, Token, Vocab};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const BINARY_MAGIC: &[u8; 4] = b"CNF1";

#[derive(Debug, Clone, PartialEq)]
pub struct Utterance {
    pub id: String,
    pub steps: Vec<Vec<f64>>,
    pub duration_seconds: Option<f64>,
    /// NDJSON line or binary record number, 1-based.
    pub line: usize,
}

#[derive(Serialize, Deserialize)]
struct VocabFile {
    size: usize,
    blank_id: usize,
    tokens: Vec<TokenEntry>,
}

#[derive(Serialize, Deserialize)]
struct TokenEntry {
    id: usize,
    text: String,
    word_begin: bool,
}

pub fn read_vocab(path: &Path) -> Result<Vocab> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let file: VocabFile =
        serde_json::from_str(&text).map_err(|e| CliError::schema(path, Some(e.line()), e.to_string()))?;
    if file.size != file.tokens.len() {
        return Err(CliError::schema(
            path,
            None,
            format!("size is {} but {} tokens are listed", file.size, file.tokens.len()),
        ));
    }
    let tokens = file
        .tokens
        .into_iter()
        .map(|t| Token { id: t.id, text: t.text, word_begin: t.word_begin })
        .collect();
    Vocab::new(file.blank_id, tokens).map_err(|e| CliError::schema(path, None, e.to_string()))
}

pub fn write_vocab(path: &Path, vocab: &Vocab) -> Result<()> {
    let file = VocabFile {
        size: vocab.size(),
        blank_id: vocab.blank_id(),
        tokens: vocab
            .tokens()
            .iter()
            .map(|t| TokenEntry { id: t.id, text: t.text.clone(), word_begin: t.word_begin })
            .collect(),
    };
    let mut text = serde_json::to_string_pretty(&file).expect("vocab serializes");
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

/// Reads NDJSON or CNF1 posteriors, chosen by the leading magic bytes.
/// Every row is checked against `vocab_size` and the simplex tolerance;
/// `renormalize` rescales rows to sum to one first.
pub fn read_posteriors(path: &Path, vocab_size: usize, renormalize: bool) -> Result<Vec<Utterance>> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    let utterances = if bytes.starts_with(BINARY_MAGIC) {
        parse_binary(path, &bytes, vocab_size, renormalize)?
    } else {
        let text = std::str::from_utf8(&bytes)
            .map_err(|e| CliError::schema(path, None, format!("not UTF-8 and not a CNF1 container: {e}")))?;
        parse_ndjson(path, text, vocab_size, renormalize)?
    };
    let mut seen = BTreeMap::new();
    for u in &utterances {
        if let Some(first) = seen.insert(u.id.as_str(), u.line) {
            return Err(CliError::schema(
                path,
                Some(u.line),
                format!("duplicate utterance id {:?} (first seen at {first})", u.id),
            ));
        }
    }
    Ok(utterances)
}

#[derive(Deserialize)]
struct Record {
    id: String,
    steps: Vec<Vec<f64>>,
    #[serde(default)]
    duration: Option<f64>,
}

fn parse_ndjson(path: &Path, text: &str, vocab_size: usize, renormalize: bool) -> Result<Vec<Utterance>> {
    let lines: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| (i + 1, l))
        .collect();
    let parsed: Vec<Result<Utterance>> = lines
        .par_iter()
        .map(|&(line, l)| {
            let rec: Record =
                serde_json::from_str(l).map_err(|e| CliError::schema(path, Some(line), e.to_string()))?;
            let mut steps = rec.steps;
            check_rows(path, line, &rec.id, &mut steps, vocab_size, renormalize)?;
            let duration = check_duration(path, line, rec.duration)?;
            Ok(Utterance { id: rec.id, steps, duration_seconds: duration, line })
        })
        .collect();
    parsed.into_iter().collect()
}

fn check_duration(path: &Path, line: usize, d: Option<f64>) -> Result<Option<f64>> {
    match d {
        Some(d) if !(d.is_finite() && d >= 0.0) => {
            Err(CliError::schema(path, Some(line), format!("duration must be finite and non-negative, got {d}")))
        }
        d => Ok(d),
    }
}

fn check_rows(
    path: &Path,
    line: usize,
    id: &str,
    steps: &mut [Vec<f64>],
    vocab_size: usize,
    renormalize: bool,
) -> Result<()> {
    if id.is_empty() {
        return Err(CliError::schema(path, Some(line), "empty utterance id"));
    }
    for (k, row) in steps.iter_mut().enumerate() {
        if row.len() != vocab_size {
            return Err(CliError::schema(
                path,
                Some(line),
                format!("utterance {id:?} step {k}: expected {vocab_size} probabilities, found {}", row.len()),
            ));
        }
        if renormalize {
            let total: f64 = row.iter().sum();
            if total.is_finite() && total > 0.0 && row.iter().all(|&p| p >= 0.0) {
                row.iter_mut().for_each(|p| *p /= total);
            }
        }
        ProbDist::new(row)
            .map_err(|e| CliError::schema(path, Some(line), format!("utterance {id:?} step {k}: {e}")))?;
    }
    Ok(())
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Option<&'a [u8]> {
        let end = self.pos.checked_add(n)?;
        let out = self.bytes.get(self.pos..end)?;
        self.pos = end;
        Some(out)
    }

    fn u32(&mut self) -> Option<u32> {
        self.take(4).map(|b| u32::from_le_bytes(b.try_into().expect("4 bytes")))
    }

    fn f32(&mut self) -> Option<f32> {
        self.take(4).map(|b| f32::from_le_bytes(b.try_into().expect("4 bytes")))
    }
}

fn parse_binary(path: &Path, bytes: &[u8], vocab_size: usize, renormalize: bool) -> Result<Vec<Utterance>> {
    let mut c = Cursor { bytes, pos: BINARY_MAGIC.len() };
    let v = c
        .u32()
        .ok_or_else(|| CliError::schema(path, None, "truncated header"))? as usize;
    if v != vocab_size {
        return Err(CliError::schema(
            path,
            None,
            format!("container has {v} probabilities per step, vocabulary has {vocab_size}"),
        ));
    }
    let mut out = Vec::new();
    while c.pos < bytes.len() {
        let record = out.len() + 1;
        let truncated = || CliError::schema(path, Some(record), "truncated record");
        let id_len = c.u32().ok_or_else(truncated)? as usize;
        let id = std::str::from_utf8(c.take(id_len).ok_or_else(truncated)?)
            .map_err(|e| CliError::schema(path, Some(record), format!("id is not UTF-8: {e}")))?
            .to_string();
        let duration = c.f32().ok_or_else(truncated)?;
        let n_steps = c.u32().ok_or_else(truncated)? as usize;
        let raw = c.take(n_steps * v * 4).ok_or_else(truncated)?;
        let mut steps: Vec<Vec<f64>> = raw
            .chunks_exact(v * 4)
            .map(|row| {
                row.chunks_exact(4)
                    .map(|b| f32::from_le_bytes(b.try_into().expect("4 bytes")) as f64)
                    .collect()
            })
            .collect();
        check_rows(path, record, &id, &mut steps, vocab_size, renormalize)?;
        let duration = if duration.is_nan() { None } else { Some(duration as f64) };
        let duration = check_duration(path, record, duration)?;
        out.push(Utterance { id, steps, duration_seconds: duration, line: record });
    }
    Ok(out)
}

/// Borrowed view of one utterance for writing.
pub struct RecordRef<'a> {
    pub id: &'a str,
    pub steps: &'a [Vec<f64>],
    pub duration_seconds: Option<f64>,
}

#[derive(Serialize)]
struct RecordOut<'a> {
    id: &'a str,
    steps: &'a [Vec<f64>],
    #[serde(skip_serializing_if = "Option::is_none")]
    duration: Option<f64>,
}

fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    fs::File::create(path).map(BufWriter::new).map_err(|e| CliError::io(path, e))
}

pub fn write_ndjson<'a>(path: &Path, records: impl IntoIterator<Item = RecordRef<'a>>) -> Result<()> {
    let mut w = create(path)?;
    let io = |e| CliError::io(path, e);
    for r in records {
        let out = RecordOut { id: r.id, steps: r.steps, duration: r.duration_seconds };
        serde_json::to_writer(&mut w, &out).map_err(|e| io(e.into()))?;
        w.write_all(b"\n").map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn write_binary<'a>(
    path: &Path,
    vocab_size: usize,
    records: impl IntoIterator<Item = RecordRef<'a>>,
) -> Result<()> {
    let mut w = create(path)?;
    let io = |e| CliError::io(path, e);
    w.write_all(BINARY_MAGIC).map_err(io)?;
    w.write_all(&(vocab_size as u32).to_le_bytes()).map_err(io)?;
    for r in records {
        w.write_all(&(r.id.len() as u32).to_le_bytes()).map_err(io)?;
        w.write_all(r.id.as_bytes()).map_err(io)?;
        let d = r.duration_seconds.map_or(f32::NAN, |d| d as f32);
        w.write_all(&d.to_le_bytes()).map_err(io)?;
        w.write_all(&(r.steps.len() as u32).to_le_bytes()).map_err(io)?;
        for row in r.steps {
            for &p in row {
                w.write_all(&(p as f32).to_le_bytes()).map_err(io)?;
            }
        }
    }
    w.flush().map_err(io)
}

/// Reads `id<TAB>words` lines. A line with no tab is an utterance with an
/// empty reference.
pub fn read_references(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let (id, words) = line.split_once('\t').unwrap_or((line, ""));
        let id = id.trim();
        if id.is_empty() {
            return Err(CliError::schema(path, Some(line_no), "empty utterance id"));
        }
        if out.insert(id.to_string(), words.to_string()).is_some() {
            return Err(CliError::schema(path, Some(line_no), format!("duplicate utterance id {id:?}")));
        }
    }
    Ok(out)
}

pub fn write_references<'a>(path: &Path, refs: impl IntoIterator<Item = (&'a str, String)>) -> Result<()> {
    let mut w = create(path)?;
    let io = |e| CliError::io(path, e);
    for (id, words) in refs {
        writeln!(w, "{id}\t{words}").map_err(io)?;
    }
    w.flush().map_err(io)
}

/// Posteriors joined with their references, sorted by utterance id.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub utterances: Vec<Utterance>,
    pub references: BTreeMap<String, String>,
    /// References with no posterior stream; they are not scored.
    pub unmatched_references: usize,
    pub posteriors_path: PathBuf,
    pub references_path: PathBuf,
}

impl Dataset {
    pub fn load(posteriors: &Path, references: &Path, vocab: &Vocab, renormalize: bool) -> Result<Self> {
        let mut utterances = read_posteriors(posteriors, vocab.size(), renormalize)?;
        let refs = read_references(references)?;
        utterances.sort_by(|a, b| a.id.cmp(&b.id));
        if let Some(u) = utterances.iter().find(|u| !refs.contains_key(&u.id)) {
            return Err(CliError::schema(
                references,
                None,
                format!("no reference for utterance {:?} ({}:{})", u.id, posteriors.display(), u.line),
            ));
        }
        let unmatched = refs.len() - utterances.len();
        Ok(Self {
            utterances,
            references: refs,
            unmatched_references: unmatched,
            posteriors_path: posteriors.to_path_buf(),
            references_path: references.to_path_buf(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tmp() -> tempfile::TempDir {
        tempfile::tempdir().unwrap()
    }

    #[test]
    fn ndjson_round_trip_keeps_exact_values() {
        let dir = tmp();
        let p = dir.path().join("p.ndjson");
        let steps = vec![vec![0.1, 0.2, 0.7], vec![1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]];
        write_ndjson(&p, [RecordRef { id: "a", steps: &steps, duration_seconds: Some(0.08) }]).unwrap();
        let back = read_posteriors(&p, 3, false).unwrap();
        assert_eq!(back[0].steps, steps);
        assert_eq!(back[0].duration_seconds, Some(0.08));
        assert_eq!(back[0].line, 1);
    }

    #[test]
    fn binary_round_trip_within_f32() {
        let dir = tmp();
        let p = dir.path().join("p.bin");
        let steps = vec![vec![0.1, 0.2, 0.7]; 4];
        let recs = [
            RecordRef { id: "x", steps: &steps, duration_seconds: None },
            RecordRef { id: "y", steps: &steps[..1], duration_seconds: Some(0.5) },
        ];
        write_binary(&p, 3, recs).unwrap();
        let back = read_posteriors(&p, 3, false).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[0].duration_seconds, None);
        assert_eq!(back[1].duration_seconds, Some(0.5));
        assert_eq!(back[1].line, 2);
        for (a, b) in back[0].steps[0].iter().zip(&steps[0]) {
            assert!((a - b).abs() < 1e-7);
        }
        assert!(matches!(read_posteriors(&p, 4, false), Err(CliError::Schema { .. })));
    }

    #[test]
    fn schema_errors_carry_line_numbers() {
        let dir = tmp();
        let p = dir.path().join("p.ndjson");
        fs::write(&p, "{\"id\":\"a\",\"steps\":[[0.5,0.5]]}\n\n{\"id\":\"b\",\"steps\":[[0.5,0.6]]}\n").unwrap();
        let err = read_posteriors(&p, 2, false).unwrap_err();
        assert!(matches!(err, CliError::Schema { line: Some(3), .. }), "{err}");
        assert!(err.to_string().contains("p.ndjson:3"));
        assert_eq!(err.exit_code(), 2);
        assert_eq!(read_posteriors(&p, 2, true).unwrap()[1].steps[0], vec![0.5 / 1.1, 0.6 / 1.1]);

        fs::write(&p, "{\"id\":\"a\",\"steps\":[[1.0]]}\n").unwrap();
        assert!(matches!(read_posteriors(&p, 2, false), Err(CliError::Schema { line: Some(1), .. })));
        fs::write(&p, "{\"id\":\"a\",\"steps\":[]}\n{\"id\":\"a\",\"steps\":[]}\n").unwrap();
        assert!(matches!(read_posteriors(&p, 2, false), Err(CliError::Schema { line: Some(2), .. })));
    }

    #[test]
    fn truncated_binary_is_a_schema_error() {
        let dir = tmp();
        let p = dir.path().join("p.bin");
        let steps = vec![vec![0.5, 0.5]; 3];
        write_binary(&p, 2, [RecordRef { id: "x", steps: &steps, duration_seconds: None }]).unwrap();
        let mut bytes = fs::read(&p).unwrap();
        bytes.truncate(bytes.len() - 3);
        fs::write(&p, bytes).unwrap();
        let err = read_posteriors(&p, 2, false).unwrap_err();
        assert!(err.to_string().contains("truncated record"), "{err}");
    }

    #[test]
    fn references_allow_empty_text() {
        let dir = tmp();
        let p = dir.path().join("r.tsv");
        fs::write(&p, "u1\thello world\nu2\t\nu3\n").unwrap();
        let r = read_references(&p).unwrap();
        assert_eq!(r["u1"], "hello world");
        assert_eq!(r["u2"], "");
        assert_eq!(r["u3"], "");
        fs::write(&p, "u1\ta\nu1\tb\n").unwrap();
        assert!(matches!(read_references(&p), Err(CliError::Schema { line: Some(2), .. })));
    }

    #[test]
    fn vocab_round_trip_and_validation() {
        let dir = tmp();
        let p = dir.path().join("v.json");
        let vocab = Vocab::new(
            0,
            vec![
                Token { id: 0, text: "<b>".into(), word_begin: false },
                Token { id: 1, text: "\u{2581}a".into(), word_begin: true },
            ],
        )
        .unwrap();
        write_vocab(&p, &vocab).unwrap();
        assert_eq!(read_vocab(&p).unwrap(), vocab);
        fs::write(&p, r#"{"size": 3, "blank_id": 0, "tokens": []}"#).unwrap();
        assert!(matches!(read_vocab(&p), Err(CliError::Schema { .. })));
    }
}
