//! CTC decoding and sequence scoring: greedy decoding, edit-distance
//! alignment, phone error rate, the CTC forward loss with gradients, and the
//! matched-pairs segment significance test between two systems.
//!
//! Sequences are CTC class indices over a phone inventory: class 0 is the
//! blank, phones occupy `1..=N`. Decoded and reference sequences never
//! contain the blank.

mod align;
mod loss;
mod mapsswe;

use thiserror::Error;

pub use align::{levenshtein_align, per, AlignOp, Alignment};
pub use loss::{ctc_forward_loss, CtcLoss};
pub use mapsswe::{mapsswe_test, significance_stars, MapssweCase, MapssweReport, SegmentMode};

/// CTC class index of the blank.
pub const BLANK: usize = 0;

#[derive(Debug, Error)]
pub enum CtcError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: bad json record: {reason}")]
    BadJson { line: usize, reason: String },
    #[error("grid shape mismatch: {values} values for {n_frames} frames x {n_classes} classes")]
    BadGridShape {
        values: usize,
        n_frames: usize,
        n_classes: usize,
    },
    #[error("grid needs at least 2 classes (blank + one phone), got {0}")]
    TooFewClasses(usize),
    #[error("non-finite logit at frame {frame}, class {class}")]
    NonFiniteLogit { frame: usize, class: usize },
    #[error("target class {class} out of range 1..{n_classes}")]
    BadTargetClass { class: usize, n_classes: usize },
    #[error("infeasible target: needs at least {needed} frames, grid has {have}")]
    InfeasibleTarget { needed: usize, have: usize },
    #[error("empty total reference")]
    EmptyReference,
    #[error("need at least 2 segments for the matched-pairs statistic, got {0}")]
    TooFewSegments(usize),
}

/// Per-utterance frame-by-class logits with the blank at class 0.
#[derive(Debug, Clone, PartialEq)]
pub struct LogitGrid {
    n_frames: usize,
    n_classes: usize,
    values: Vec<f64>,
}

impl LogitGrid {
    pub fn new(n_frames: usize, n_classes: usize, values: Vec<f64>) -> Result<Self, CtcError> {
        if n_classes < 2 {
            return Err(CtcError::TooFewClasses(n_classes));
        }
        if values.len() != n_frames * n_classes {
            return Err(CtcError::BadGridShape {
                values: values.len(),
                n_frames,
                n_classes,
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(CtcError::NonFiniteLogit {
                frame: i / n_classes,
                class: i % n_classes,
            });
        }
        Ok(Self {
            n_frames,
            n_classes,
            values,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, CtcError> {
        let n_classes = rows.first().map_or(0, Vec::len);
        Self::new(
            rows.len(),
            n_classes,
            rows.iter().flatten().copied().collect(),
        )
    }

    pub fn n_frames(&self) -> usize {
        self.n_frames
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn row(&self, frame: usize) -> &[f64] {
        &self.values[frame * self.n_classes..(frame + 1) * self.n_classes]
    }
}

/// A decoded hypothesis aligned against its reference, with the error counts
/// of a minimal edit-distance alignment.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredHypothesis {
    pub utterance_id: String,
    pub reference: Vec<usize>,
    pub hypothesis: Vec<usize>,
    pub substitutions: usize,
    pub insertions: usize,
    pub deletions: usize,
}

impl ScoredHypothesis {
    pub fn score(utterance_id: impl Into<String>, reference: Vec<usize>, hypothesis: Vec<usize>) -> Self {
        let a = levenshtein_align(&reference, &hypothesis);
        Self {
            utterance_id: utterance_id.into(),
            reference,
            hypothesis,
            substitutions: a.substitutions,
            insertions: a.insertions,
            deletions: a.deletions,
        }
    }
}

/// One utterance's phone sequence as stored in hypothesis/reference files:
/// JSON-lines records with the phones as inventory symbols.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhoneSeqRecord {
    pub utterance_id: String,
    pub phones: Vec<String>,
}

/// Reads a JSON-lines phone sequence file.
pub fn read_phone_seqs(path: impl AsRef<std::path::Path>) -> Result<Vec<PhoneSeqRecord>, CtcError> {
    use std::io::BufRead;
    let reader = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: PhoneSeqRecord = serde_json::from_str(&line).map_err(|e| CtcError::BadJson {
            line: idx + 1,
            reason: e.to_string(),
        })?;
        out.push(rec);
    }
    Ok(out)
}

/// Writes a JSON-lines phone sequence file.
pub fn write_phone_seqs(
    path: impl AsRef<std::path::Path>,
    records: &[PhoneSeqRecord],
) -> Result<(), CtcError> {
    use std::io::Write;
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    for r in records {
        writeln!(w, "{}", serde_json::to_string(r).expect("serializable"))?;
    }
    w.flush()?;
    Ok(())
}

/// Greedy CTC decoding: per-frame argmax (ties to the lowest class index),
/// collapse consecutive duplicates, drop blanks.
pub fn greedy_decode(grid: &LogitGrid) -> Vec<usize> {
    let mut out = Vec::new();
    let mut prev = usize::MAX;
    for t in 0..grid.n_frames {
        let row = grid.row(t);
        let mut best = 0;
        for (c, &v) in row.iter().enumerate() {
            if v > row[best] {
                best = c;
            }
        }
        if best != prev && best != BLANK {
            out.push(best);
        }
        prev = best;
    }
    out
}
