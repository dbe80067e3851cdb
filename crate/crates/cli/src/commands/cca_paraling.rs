//! `cca-paraling`: layer-wise CCA between pooled utterance representations
//! and the six paralinguistic feature groups, one sweep per group.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use layerprobe_core::cca::layerwise_cca_sweep;
use layerprobe_core::dsp::{
    extract_lld, read_wav, utterance_functionals, FeatureGroup, FeatureGroupVector,
};
use layerprobe_core::io::{read_labels, read_manifest, read_repr_tensor, UtteranceManifest};
use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{audio_path_of, layer_matrices, repr_path_of, require_files, to_json_pretty, write_output};
use crate::config::{CcaParalingSection, LoadedConfig};
use crate::error::CliError;
use crate::svg::{line_chart, Series};

#[derive(Serialize)]
struct GroupResult {
    group: String,
    dim: usize,
    scores: Vec<f64>,
}

#[derive(Serialize)]
struct ParalingCcaReport {
    seed: u64,
    samples_per_class: usize,
    classes: Vec<String>,
    n_samples: usize,
    cca: crate::config::CcaSection,
    results: Vec<GroupResult>,
}

pub fn run(loaded: &LoadedConfig, out_dir: &Path, force_svg: bool) -> Result<(), CliError> {
    let section: CcaParalingSection = loaded
        .config
        .cca_paraling
        .clone()
        .ok_or_else(|| CliError::Config("config has no [cca_paraling] section".into()))?;
    if section.classes.is_empty() {
        return Err(CliError::Config("[cca_paraling] lists no classes".into()));
    }

    let manifest_path = loaded.resolve(&section.manifest);
    let labels_path = loaded.resolve(&section.labels);
    require_files(&[("manifest", &manifest_path), ("labels", &labels_path)])?;

    let manifest = read_manifest(&manifest_path)?;
    let manifest_dir = manifest_path.parent().unwrap_or(Path::new(".")).to_path_buf();
    let labels = read_labels(&labels_path)?;
    let label_of: BTreeMap<&str, &str> = labels
        .iter()
        .filter(|l| l.task_id == section.task_id)
        .map(|l| (l.utterance_id.as_str(), l.label.as_str()))
        .collect();

    // Sample plan: per class, keep manifest order, subsample with the seeded
    // generator when a class exceeds the budget.
    let mut rng = ChaCha8Rng::seed_from_u64(loaded.config.seed);
    let mut selected: Vec<&UtteranceManifest> = Vec::new();
    for class in &section.classes {
        let mut members: Vec<&UtteranceManifest> = manifest
            .iter()
            .filter(|m| label_of.get(m.utterance_id.as_str()) == Some(&class.as_str()))
            .collect();
        if members.len() < section.samples_per_class {
            return Err(CliError::Input(format!(
                "class {:?} has {} samples, need {}",
                class,
                members.len(),
                section.samples_per_class
            )));
        }
        if members.len() > section.samples_per_class {
            members.shuffle(&mut rng);
            members.truncate(section.samples_per_class);
            members.sort_by(|a, b| a.utterance_id.cmp(&b.utterance_id));
        }
        selected.extend(members);
    }

    // Per-utterance feature extraction and representation pooling, in
    // parallel with order-fixed collection.
    let dsp_cfg = loaded.config.dsp.clone();
    let rows: Vec<Result<(FeatureGroupVector, Vec<Vec<f32>>), CliError>> = selected
        .par_iter()
        .map(|entry| {
            let audio = read_wav(audio_path_of(&manifest_dir, entry)?)?;
            let frames = extract_lld(&audio, &dsp_cfg)?;
            let features = utterance_functionals(&frames)?;
            let tensor = read_repr_tensor(repr_path_of(&manifest_dir, entry)?)?;
            let pooled = layerprobe_core::pool::utterance_mean_pool(&tensor, None)?;
            Ok((features, pooled))
        })
        .collect();
    let mut features = Vec::with_capacity(rows.len());
    let mut pooled = Vec::with_capacity(rows.len());
    for row in rows {
        let (f, p) = row?;
        features.push(f);
        pooled.push(p);
    }

    let vec_refs: Vec<&Vec<Vec<f32>>> = pooled.iter().collect();
    let per_layer = layer_matrices(&vec_refs);
    let cca_cfg = loaded.config.cca.to_config(loaded.config.seed);

    let mut results = Vec::new();
    for group in FeatureGroup::ALL {
        let dim = group.dim();
        let y = DMatrix::from_fn(features.len(), dim, |r, c| features[r].group(group)[c]);
        let sweep = layerwise_cca_sweep(&per_layer, &y, &cca_cfg)?;
        results.push(GroupResult {
            group: group.name().to_string(),
            dim,
            scores: sweep.into_iter().map(|(_, s)| s).collect(),
        });
    }

    let mut csv = String::from("group,layer,score\n");
    for r in &results {
        for (layer, score) in r.scores.iter().enumerate() {
            writeln!(csv, "{},{},{}", r.group, layer, score).unwrap();
        }
    }
    write_output(&out_dir.join("cca_paraling.csv"), &csv)?;

    let report = ParalingCcaReport {
        seed: loaded.config.seed,
        samples_per_class: section.samples_per_class,
        classes: section.classes.clone(),
        n_samples: features.len(),
        cca: loaded.config.cca.clone(),
        results,
    };
    write_output(&out_dir.join("cca_paraling.json"), &to_json_pretty(&report))?;

    if section.emit_svg || force_svg {
        let series: Vec<Series> = report
            .results
            .iter()
            .map(|r| Series {
                name: r.group.clone(),
                points: r
                    .scores
                    .iter()
                    .enumerate()
                    .map(|(l, &s)| (l as f64, s))
                    .collect(),
            })
            .collect();
        let svg = line_chart(
            "Layer-wise CCA with paralinguistic groups",
            "layer",
            "CCA score",
            &series,
        );
        write_output(&out_dir.join("cca_paraling.svg"), &svg)?;
    }
    Ok(())
}
