//! Text-format corpus inputs: manifests, alignments, labels, phone
//! inventories, and SAMPA-to-IPA mapping tables.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: malformed row: {reason}")]
    MalformedRow { line: usize, reason: String },
    #[error("line {line}: unknown phone symbol {symbol:?}")]
    UnknownPhone { line: usize, symbol: String },
    #[error("line {line}: empty or inverted interval [{start_s}, {end_s})")]
    BadInterval { line: usize, start_s: f64, end_s: f64 },
    #[error("duplicate phone symbol {0:?} in inventory")]
    DuplicateSymbol(String),
    #[error("duplicate utterance id {0:?} in manifest")]
    DuplicateUtterance(String),
    #[error("utterance {0:?}: duration_s must be > 0")]
    BadDuration(String),
    #[error("utterance {0:?}: needs at least one of audio_path, repr_path")]
    MissingPath(String),
    #[error("unknown group key {0:?}")]
    UnknownGroup(String),
    #[error("unmapped symbol {symbol:?} at position {position}")]
    UnmappedSymbol { symbol: String, position: usize },
    #[error("line {line}: bad json record: {reason}")]
    BadJson { line: usize, reason: String },
}

/// One corpus utterance: where its data lives and which group (family,
/// speaker) it belongs to for leave-one-group-out partitioning.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UtteranceManifest {
    pub utterance_id: String,
    pub group_key: String,
    pub duration_s: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub audio_path: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub repr_path: Option<String>,
}

/// One aligned phone interval, `[start_s, end_s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignmentEntry {
    pub utterance_id: String,
    pub phone: String,
    pub start_s: f64,
    pub end_s: f64,
}

/// One labeled interval of a continuous annotation track, `[start_s, end_s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelSpan {
    pub utterance_id: String,
    pub label: String,
    pub start_s: f64,
    pub end_s: f64,
}

/// One categorical label for one utterance under one task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabelRecord {
    pub utterance_id: String,
    pub task_id: String,
    pub label: String,
}

/// Ordered phone set. CTC class 0 is always the blank and is not a member of
/// the inventory; phone `i` (0-based) occupies CTC class `i + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhoneInventory {
    symbols: Vec<String>,
    by_symbol: HashMap<String, usize>,
}

impl PhoneInventory {
    /// CTC class index reserved for the blank.
    pub const BLANK_INDEX: usize = 0;

    pub fn new(symbols: Vec<String>) -> Result<Self, CorpusError> {
        let mut by_symbol = HashMap::with_capacity(symbols.len());
        for (i, s) in symbols.iter().enumerate() {
            if by_symbol.insert(s.clone(), i).is_some() {
                return Err(CorpusError::DuplicateSymbol(s.clone()));
            }
        }
        Ok(Self { symbols, by_symbol })
    }

    /// Reads an inventory file: one symbol per line, blank lines skipped.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, CorpusError> {
        let reader = BufReader::new(File::open(path)?);
        let mut symbols = Vec::new();
        for line in reader.lines() {
            let line = line?;
            let sym = line.trim();
            if !sym.is_empty() {
                symbols.push(sym.to_string());
            }
        }
        Self::new(symbols)
    }

    pub fn write_file(&self, path: impl AsRef<Path>) -> Result<(), CorpusError> {
        let mut w = BufWriter::new(File::create(path)?);
        for s in &self.symbols {
            writeln!(w, "{s}")?;
        }
        w.flush()?;
        Ok(())
    }

    /// Number of phones (excluding the blank).
    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    /// 0-based index of a phone among the inventory symbols.
    pub fn phone_index(&self, symbol: &str) -> Option<usize> {
        self.by_symbol.get(symbol).copied()
    }

    /// CTC class of a phone: `phone_index + 1` (class 0 is blank).
    pub fn ctc_class(&self, symbol: &str) -> Option<usize> {
        self.phone_index(symbol).map(|i| i + 1)
    }

    pub fn symbol(&self, phone_index: usize) -> Option<&str> {
        self.symbols.get(phone_index).map(String::as_str)
    }

    /// Symbol of a CTC class (`None` for the blank or out of range).
    pub fn symbol_of_ctc_class(&self, class: usize) -> Option<&str> {
        if class == Self::BLANK_INDEX {
            None
        } else {
            self.symbol(class - 1)
        }
    }

    /// Column count of a CTC logit grid over this inventory.
    pub fn n_ctc_classes(&self) -> usize {
        self.symbols.len() + 1
    }
}

/// Strict float parse: decimal point only, no locale forms.
fn parse_f64(field: &str, line: usize, what: &str) -> Result<f64, CorpusError> {
    field.parse::<f64>().map_err(|_| CorpusError::MalformedRow {
        line,
        reason: format!("cannot parse {what} from {field:?}"),
    })
}

/// Reads a 4-column headerless TSV of phone alignments
/// (`utterance_id  phone  start_s  end_s`), validating every phone against
/// the inventory and every interval for positive length.
pub fn read_alignments(
    path: impl AsRef<Path>,
    inventory: &PhoneInventory,
) -> Result<Vec<AlignmentEntry>, CorpusError> {
    let spans = read_span_tsv(path)?;
    for (line, span) in spans.iter() {
        if inventory.phone_index(&span.label).is_none() {
            return Err(CorpusError::UnknownPhone {
                line: *line,
                symbol: span.label.clone(),
            });
        }
    }
    Ok(spans
        .into_iter()
        .map(|(_, s)| AlignmentEntry {
            utterance_id: s.utterance_id,
            phone: s.label,
            start_s: s.start_s,
            end_s: s.end_s,
        })
        .collect())
}

/// Reads a 4-column headerless TSV of labeled intervals
/// (`utterance_id  label  start_s  end_s`) without any symbol validation.
/// Used for continuous annotation tracks such as vocalization types.
pub fn read_label_track(path: impl AsRef<Path>) -> Result<Vec<LabelSpan>, CorpusError> {
    Ok(read_span_tsv(path)?.into_iter().map(|(_, s)| s).collect())
}

fn read_span_tsv(path: impl AsRef<Path>) -> Result<Vec<(usize, LabelSpan)>, CorpusError> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 4 {
            return Err(CorpusError::MalformedRow {
                line: lineno,
                reason: format!("expected 4 tab-separated columns, got {}", cols.len()),
            });
        }
        let start_s = parse_f64(cols[2], lineno, "start_s")?;
        let end_s = parse_f64(cols[3], lineno, "end_s")?;
        if !(end_s > start_s) {
            return Err(CorpusError::BadInterval {
                line: lineno,
                start_s,
                end_s,
            });
        }
        out.push((
            lineno,
            LabelSpan {
                utterance_id: cols[0].to_string(),
                label: cols[1].to_string(),
                start_s,
                end_s,
            },
        ));
    }
    Ok(out)
}

/// Writes alignments in the same 4-column TSV, shortest round-trip floats.
pub fn write_alignments(
    path: impl AsRef<Path>,
    entries: &[AlignmentEntry],
) -> Result<(), CorpusError> {
    let mut w = BufWriter::new(File::create(path)?);
    for e in entries {
        writeln!(w, "{}\t{}\t{}\t{}", e.utterance_id, e.phone, e.start_s, e.end_s)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a JSON-lines manifest and validates the per-manifest invariants:
/// unique ids, positive durations, at least one data path per utterance.
pub fn read_manifest(path: impl AsRef<Path>) -> Result<Vec<UtteranceManifest>, CorpusError> {
    let reader = BufReader::new(File::open(path)?);
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let entry: UtteranceManifest =
            serde_json::from_str(&line).map_err(|e| CorpusError::BadJson {
                line: idx + 1,
                reason: e.to_string(),
            })?;
        if !seen.insert(entry.utterance_id.clone()) {
            return Err(CorpusError::DuplicateUtterance(entry.utterance_id));
        }
        if !(entry.duration_s > 0.0) {
            return Err(CorpusError::BadDuration(entry.utterance_id));
        }
        if entry.audio_path.is_none() && entry.repr_path.is_none() {
            return Err(CorpusError::MissingPath(entry.utterance_id));
        }
        out.push(entry);
    }
    Ok(out)
}

pub fn write_manifest(
    path: impl AsRef<Path>,
    entries: &[UtteranceManifest],
) -> Result<(), CorpusError> {
    let mut w = BufWriter::new(File::create(path)?);
    for e in entries {
        let json = serde_json::to_string(e).expect("manifest entries always serialize");
        writeln!(w, "{json}")?;
    }
    w.flush()?;
    Ok(())
}

/// Reads JSON-lines label records (`utterance_id`, `task_id`, `label`).
pub fn read_labels(path: impl AsRef<Path>) -> Result<Vec<LabelRecord>, CorpusError> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: LabelRecord = serde_json::from_str(&line).map_err(|e| CorpusError::BadJson {
            line: idx + 1,
            reason: e.to_string(),
        })?;
        out.push(rec);
    }
    Ok(out)
}

pub fn write_labels(path: impl AsRef<Path>, records: &[LabelRecord]) -> Result<(), CorpusError> {
    let mut w = BufWriter::new(File::create(path)?);
    for r in records {
        let json = serde_json::to_string(r).expect("label records always serialize");
        writeln!(w, "{json}")?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a 2-column TSV mapping table (`sampa  ipa`).
pub fn read_sampa_table(path: impl AsRef<Path>) -> Result<HashMap<String, String>, CorpusError> {
    let reader = BufReader::new(File::open(path)?);
    let mut table = HashMap::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 2 {
            return Err(CorpusError::MalformedRow {
                line: idx + 1,
                reason: format!("expected 2 tab-separated columns, got {}", cols.len()),
            });
        }
        table.insert(cols[0].to_string(), cols[1].to_string());
    }
    Ok(table)
}

/// Order-preserving one-to-one substitution through a SAMPA-to-IPA table.
/// Reports the first unmapped symbol together with its position.
pub fn map_sampa_to_ipa(
    symbols: &[String],
    table: &HashMap<String, String>,
) -> Result<Vec<String>, CorpusError> {
    symbols
        .iter()
        .enumerate()
        .map(|(position, s)| {
            table
                .get(s)
                .cloned()
                .ok_or_else(|| CorpusError::UnmappedSymbol {
                    symbol: s.clone(),
                    position,
                })
        })
        .collect()
}

/// Splits a manifest into `(train, heldout)` by group key. Every held-out
/// group must occur in the manifest; membership is decided solely by
/// `group_key`, so the two halves are disjoint and cover the input.
pub fn split_by_group(
    manifest: &[UtteranceManifest],
    held_out_groups: &BTreeSet<String>,
) -> Result<(Vec<UtteranceManifest>, Vec<UtteranceManifest>), CorpusError> {
    let present: HashSet<&str> = manifest.iter().map(|m| m.group_key.as_str()).collect();
    for g in held_out_groups {
        if !present.contains(g.as_str()) {
            return Err(CorpusError::UnknownGroup(g.clone()));
        }
    }
    let mut train = Vec::new();
    let mut heldout = Vec::new();
    for m in manifest {
        if held_out_groups.contains(&m.group_key) {
            heldout.push(m.clone());
        } else {
            train.push(m.clone());
        }
    }
    Ok((train, heldout))
}
