//! `ingest`: validate every input file referenced by the config and write a
//! summary report.

use std::path::Path;

use layerprobe_core::io::{
    read_alignments, read_labels, read_manifest, read_repr_tensor, PhoneInventory,
};
use serde::Serialize;

use super::{repr_path_of, require_files, to_json_pretty, write_output};
use crate::config::LoadedConfig;
use crate::error::CliError;

#[derive(Serialize)]
struct UtteranceReport {
    utterance_id: String,
    group_key: String,
    duration_s: f64,
    has_audio: bool,
    has_repr: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    n_frames: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    n_layers: Option<usize>,
}

#[derive(Serialize)]
struct IngestReport {
    n_utterances: usize,
    n_groups: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    inventory_size: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    n_alignment_entries: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    n_label_records: Option<usize>,
    utterances: Vec<UtteranceReport>,
}

pub fn run(loaded: &LoadedConfig, out_dir: &Path) -> Result<(), CliError> {
    let section = loaded
        .config
        .ingest
        .clone()
        .ok_or_else(|| CliError::Config("config has no [ingest] section".into()))?;

    let manifest_path = loaded.resolve(&section.manifest);
    let mut required = vec![("manifest", manifest_path.clone())];
    if let Some(p) = &section.inventory {
        required.push(("inventory", loaded.resolve(p)));
    }
    if let Some(p) = &section.alignments {
        required.push(("alignments", loaded.resolve(p)));
    }
    if let Some(p) = &section.labels {
        required.push(("labels", loaded.resolve(p)));
    }
    let refs: Vec<(&str, &Path)> = required.iter().map(|(w, p)| (*w, p.as_path())).collect();
    require_files(&refs)?;

    let manifest = read_manifest(&manifest_path)?;
    let manifest_dir = manifest_path.parent().unwrap_or(Path::new("."));

    let inventory = section
        .inventory
        .as_ref()
        .map(|p| PhoneInventory::from_file(loaded.resolve(p)))
        .transpose()?;

    let n_alignment_entries = match (&section.alignments, &inventory) {
        (Some(p), Some(inv)) => Some(read_alignments(loaded.resolve(p), inv)?.len()),
        (Some(_), None) => {
            return Err(CliError::Config(
                "[ingest] alignments requires an inventory".into(),
            ))
        }
        _ => None,
    };
    let n_label_records = section
        .labels
        .as_ref()
        .map(|p| read_labels(loaded.resolve(p)).map(|l| l.len()))
        .transpose()?;

    let mut utterances = Vec::with_capacity(manifest.len());
    for entry in &manifest {
        let (n_frames, n_layers) = if entry.repr_path.is_some() {
            let tensor = read_repr_tensor(repr_path_of(manifest_dir, entry)?)?;
            (Some(tensor.n_frames()), Some(tensor.n_layers()))
        } else {
            (None, None)
        };
        utterances.push(UtteranceReport {
            utterance_id: entry.utterance_id.clone(),
            group_key: entry.group_key.clone(),
            duration_s: entry.duration_s,
            has_audio: entry.audio_path.is_some(),
            has_repr: entry.repr_path.is_some(),
            n_frames,
            n_layers,
        });
    }

    let groups: std::collections::BTreeSet<&str> =
        manifest.iter().map(|m| m.group_key.as_str()).collect();
    let report = IngestReport {
        n_utterances: manifest.len(),
        n_groups: groups.len(),
        inventory_size: inventory.map(|i| i.len()),
        n_alignment_entries,
        n_label_records,
        utterances,
    };
    write_output(&out_dir.join("ingest_report.json"), &to_json_pretty(&report))?;
    Ok(())
}
