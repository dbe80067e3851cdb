//! `pool`: convert frame-level dumps into pooled datasets on disk, either
//! phoneme-level (central-third) or window-level (mean over sliding windows
//! labeled by the majority rule).

use std::collections::BTreeMap;
use std::path::Path;

use layerprobe_core::io::{
    read_alignments, read_label_track, read_manifest, read_repr_tensor, PhoneInventory,
};
use layerprobe_core::pool::{
    utterance_mean_pool, window_label_track, write_phoneme_pool, write_window_pool, PoolError,
    WindowSample,
};
use serde::Serialize;

use super::{pool_corpus_phonemes, repr_path_of, require_files, to_json_pretty, write_output};
use crate::config::{LoadedConfig, PoolMode, PoolSection};
use crate::error::CliError;

#[derive(Serialize)]
struct PoolSummary {
    mode: String,
    base: String,
    n_samples: usize,
    n_layers: usize,
    dim: usize,
    n_dropped: usize,
}

pub fn run(loaded: &LoadedConfig, out_dir: &Path) -> Result<(), CliError> {
    let section = loaded
        .config
        .pool
        .clone()
        .ok_or_else(|| CliError::Config("config has no [pool] section".into()))?;
    match section.mode {
        PoolMode::Phonemes => phonemes(loaded, &section, out_dir),
        PoolMode::Windows => windows(loaded, &section, out_dir),
    }
}

fn phonemes(loaded: &LoadedConfig, section: &PoolSection, out_dir: &Path) -> Result<(), CliError> {
    let inventory_path = loaded.resolve(section.inventory.as_ref().ok_or_else(|| {
        CliError::Config("[pool] phonemes mode needs an inventory".into())
    })?);
    let alignments_path = loaded.resolve(section.alignments.as_ref().ok_or_else(|| {
        CliError::Config("[pool] phonemes mode needs alignments".into())
    })?);
    let manifest_path = loaded.resolve(&section.manifest);
    require_files(&[
        ("manifest", &manifest_path),
        ("inventory", &inventory_path),
        ("alignments", &alignments_path),
    ])?;

    let manifest = read_manifest(&manifest_path)?;
    let manifest_dir = manifest_path.parent().unwrap_or(Path::new("."));
    let inventory = PhoneInventory::from_file(&inventory_path)?;
    let alignments = read_alignments(&alignments_path, &inventory)?;

    let (samples, dropped) =
        pool_corpus_phonemes(&manifest, manifest_dir, &alignments, &inventory)?;
    if samples.is_empty() {
        return Err(CliError::Input("no phones pooled".into()));
    }
    write_phoneme_pool(out_dir, &section.base, &samples)?;
    let summary = PoolSummary {
        mode: "phonemes".into(),
        base: section.base.clone(),
        n_samples: samples.len(),
        n_layers: samples[0].vector_per_layer.len(),
        dim: samples[0].vector_per_layer[0].len(),
        n_dropped: dropped,
    };
    write_output(&out_dir.join("pool_summary.json"), &to_json_pretty(&summary))?;
    Ok(())
}

fn windows(loaded: &LoadedConfig, section: &PoolSection, out_dir: &Path) -> Result<(), CliError> {
    let track_path = loaded.resolve(
        section
            .track
            .as_ref()
            .ok_or_else(|| CliError::Config("[pool] windows mode needs a track".into()))?,
    );
    let manifest_path = loaded.resolve(&section.manifest);
    require_files(&[("manifest", &manifest_path), ("track", &track_path)])?;

    let manifest = read_manifest(&manifest_path)?;
    let manifest_dir = manifest_path.parent().unwrap_or(Path::new("."));
    let track = read_label_track(&track_path)?;
    let mut by_utterance: BTreeMap<&str, Vec<(f64, f64, String)>> = BTreeMap::new();
    for span in &track {
        by_utterance
            .entry(span.utterance_id.as_str())
            .or_default()
            .push((span.start_s, span.end_s, span.label.clone()));
    }

    let mut samples: Vec<WindowSample> = Vec::new();
    let mut dropped = 0usize;
    for entry in &manifest {
        let Some(spans) = by_utterance.get(entry.utterance_id.as_str()) else {
            continue;
        };
        let tensor = read_repr_tensor(repr_path_of(manifest_dir, entry)?)?;
        let windows = window_label_track(
            spans,
            entry.duration_s,
            section.win_s,
            section.hop_s,
            section.core_s,
        )?;
        for (start_s, label) in windows {
            let Some(label) = label else { continue };
            match utterance_mean_pool(&tensor, Some((start_s, start_s + section.win_s))) {
                Ok(vectors) => samples.push(WindowSample {
                    utterance_id: entry.utterance_id.clone(),
                    start_s,
                    label,
                    vector_per_layer: vectors,
                }),
                Err(PoolError::EmptySpan | PoolError::OutsideExtent { .. }) => {
                    dropped += 1;
                    eprintln!(
                        "warning: dropping window at {start_s}s of {} outside dump extent",
                        entry.utterance_id
                    );
                }
                Err(e) => return Err(e.into()),
            }
        }
    }
    if samples.is_empty() {
        return Err(CliError::Input("no labeled windows pooled".into()));
    }
    write_window_pool(out_dir, &section.base, &samples)?;
    let summary = PoolSummary {
        mode: "windows".into(),
        base: section.base.clone(),
        n_samples: samples.len(),
        n_layers: samples[0].vector_per_layer.len(),
        dim: samples[0].vector_per_layer[0].len(),
        n_dropped: dropped,
    };
    write_output(&out_dir.join("pool_summary.json"), &to_json_pretty(&summary))?;
    Ok(())
}
