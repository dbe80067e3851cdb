//! Subcommand implementations and shared pipeline helpers.

pub mod cca_paraling;
pub mod cca_phoneme;
pub mod ingest;
pub mod pool_cmd;
pub mod probe_cmd;
pub mod report;
pub mod score;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use layerprobe_core::io::{read_repr_tensor, AlignmentEntry, PhoneInventory, UtteranceManifest};
use layerprobe_core::pool::{central_third_pool, PhonemeSample, PoolError};
use nalgebra::DMatrix;

use crate::error::CliError;

/// Checks that all required input files exist, reporting every missing path
/// at once before any computation starts.
pub fn require_files(paths: &[(&str, &Path)]) -> Result<(), CliError> {
    let missing: Vec<String> = paths
        .iter()
        .filter(|(_, p)| !p.exists())
        .map(|(what, p)| format!("{what}: {}", p.display()))
        .collect();
    if missing.is_empty() {
        Ok(())
    } else {
        Err(CliError::Input(format!(
            "missing inputs: {}",
            missing.join("; ")
        )))
    }
}

/// Resolves an utterance's representation dump path relative to the
/// manifest's directory.
pub fn repr_path_of(
    manifest_dir: &Path,
    entry: &UtteranceManifest,
) -> Result<PathBuf, CliError> {
    let rel = entry.repr_path.as_ref().ok_or_else(|| {
        CliError::Input(format!(
            "utterance {:?} has no repr_path",
            entry.utterance_id
        ))
    })?;
    let p = Path::new(rel);
    Ok(if p.is_absolute() {
        p.to_path_buf()
    } else {
        manifest_dir.join(p)
    })
}

pub fn audio_path_of(
    manifest_dir: &Path,
    entry: &UtteranceManifest,
) -> Result<PathBuf, CliError> {
    let rel = entry.audio_path.as_ref().ok_or_else(|| {
        CliError::Input(format!(
            "utterance {:?} has no audio_path",
            entry.utterance_id
        ))
    })?;
    let p = Path::new(rel);
    Ok(if p.is_absolute() {
        p.to_path_buf()
    } else {
        manifest_dir.join(p)
    })
}

/// Pools every aligned phone of a corpus with central-third pooling.
/// Phones that fall outside their utterance's dump extent are dropped with a
/// warning on stderr; the count of drops is returned.
pub fn pool_corpus_phonemes(
    manifest: &[UtteranceManifest],
    manifest_dir: &Path,
    alignments: &[AlignmentEntry],
    _inventory: &PhoneInventory,
) -> Result<(Vec<PhonemeSample>, usize), CliError> {
    let mut by_utterance: BTreeMap<&str, Vec<&AlignmentEntry>> = BTreeMap::new();
    for e in alignments {
        by_utterance.entry(e.utterance_id.as_str()).or_default().push(e);
    }
    let mut samples = Vec::new();
    let mut dropped = 0usize;
    for entry in manifest {
        let Some(entries) = by_utterance.get(entry.utterance_id.as_str()) else {
            continue;
        };
        let tensor = read_repr_tensor(repr_path_of(manifest_dir, entry)?)?;
        for a in entries {
            match central_third_pool(&tensor, a) {
                Ok(s) => samples.push(s),
                Err(PoolError::OutsideExtent { .. }) => {
                    dropped += 1;
                    eprintln!(
                        "warning: dropping phone {:?} [{}, {}) outside dump extent of {}",
                        a.phone, a.start_s, a.end_s, entry.utterance_id
                    );
                }
                Err(e) => return Err(e.into()),
            }
        }
    }
    Ok((samples, dropped))
}

/// Stacks per-layer pooled vectors into per-layer design matrices.
pub fn layer_matrices(vectors: &[&Vec<Vec<f32>>]) -> Vec<DMatrix<f64>> {
    let n = vectors.len();
    let n_layers = vectors[0].len();
    let dim = vectors[0][0].len();
    (0..n_layers)
        .map(|layer| {
            DMatrix::from_fn(n, dim, |r, c| vectors[r][layer][c] as f64)
        })
        .collect()
}

/// Writes text to a file, creating parent directories.
pub fn write_output(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(path, text)?;
    Ok(())
}

/// Serializes a JSON report with a trailing newline.
pub fn to_json_pretty<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports always serialize");
    s.push('\n');
    s
}
