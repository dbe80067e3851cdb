//! `probe`: train a weighted-average-layer probe on pooled window samples
//! with a leave-group-out split, and report metrics plus layer weights.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use layerprobe_core::io::read_manifest;
use layerprobe_core::pool::{read_window_pool, WindowSample};
use layerprobe_core::probe::{
    evaluate, extract_layer_weights, mask_from_indices, save_probe, select_best_k_layers,
    train_probe, EpochMetrics, MultiTaskData, TaskDef,
};
use nalgebra::DMatrix;
use serde::Serialize;

use super::{require_files, to_json_pretty, write_output};
use crate::config::{LoadedConfig, ProbeSection};
use crate::error::CliError;
use crate::svg::bar_chart;

#[derive(Serialize)]
struct SplitSizes {
    train: usize,
    dev: usize,
    test: usize,
}

#[derive(Serialize)]
struct ProbeReport {
    seed: u64,
    task_id: String,
    classes: Vec<String>,
    split: SplitSizes,
    #[serde(skip_serializing_if = "Option::is_none")]
    layer_mask: Option<Vec<usize>>,
    epochs: Vec<EpochMetrics>,
    dev_accuracy: f64,
    dev_macro_f1: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    test_accuracy: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    test_macro_f1: Option<f64>,
    layer_weights: Vec<f64>,
}

fn to_item(
    sample: &WindowSample,
    class_of: &BTreeMap<&str, usize>,
) -> Result<(DMatrix<f64>, usize), CliError> {
    let label = class_of.get(sample.label.as_str()).ok_or_else(|| {
        CliError::Input(format!(
            "window label {:?} not in configured classes",
            sample.label
        ))
    })?;
    let layers = sample.vector_per_layer.len();
    let dim = sample.vector_per_layer[0].len();
    let x = DMatrix::from_fn(layers, dim, |l, d| sample.vector_per_layer[l][d] as f64);
    Ok((x, *label))
}

/// Reads layer weights back from a prior run's `layer,weight` CSV.
fn read_weights_csv(path: &Path) -> Result<Vec<f64>, CliError> {
    let text = std::fs::read_to_string(path)?;
    let mut weights = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if i == 0 && line.starts_with("layer") {
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 2 {
            return Err(CliError::Input(format!(
                "{}: line {} is not layer,weight",
                path.display(),
                i + 1
            )));
        }
        weights.push(cols[1].parse::<f64>().map_err(|e| {
            CliError::Input(format!("{}: line {}: {e}", path.display(), i + 1))
        })?);
    }
    if weights.is_empty() {
        return Err(CliError::Input(format!(
            "{}: no weights found",
            path.display()
        )));
    }
    Ok(weights)
}

pub fn run(loaded: &LoadedConfig, out_dir: &Path, force_svg: bool) -> Result<(), CliError> {
    let section: ProbeSection = loaded
        .config
        .probe
        .clone()
        .ok_or_else(|| CliError::Config("config has no [probe] section".into()))?;
    if section.classes.len() < 2 {
        return Err(CliError::Config(
            "[probe] needs at least two classes".into(),
        ));
    }

    let manifest_path = loaded.resolve(&section.manifest);
    require_files(&[("manifest", &manifest_path)])?;
    let pooled_dir = loaded.resolve(&section.pooled_dir);
    let samples = read_window_pool(&pooled_dir, &section.pooled_base)?;
    let manifest = read_manifest(&manifest_path)?;
    let group_of: BTreeMap<&str, &str> = manifest
        .iter()
        .map(|m| (m.utterance_id.as_str(), m.group_key.as_str()))
        .collect();

    let class_of: BTreeMap<&str, usize> = section
        .classes
        .iter()
        .enumerate()
        .map(|(i, c)| (c.as_str(), i))
        .collect();

    let mut train_items = Vec::new();
    let mut dev_items = Vec::new();
    let mut test_items = Vec::new();
    for sample in &samples {
        let group = group_of.get(sample.utterance_id.as_str()).ok_or_else(|| {
            CliError::Input(format!(
                "window utterance {:?} missing from manifest",
                sample.utterance_id
            ))
        })?;
        let item = to_item(sample, &class_of)?;
        if section.test_groups.iter().any(|g| g == group) {
            test_items.push(item);
        } else if section.dev_groups.iter().any(|g| g == group) {
            dev_items.push(item);
        } else {
            train_items.push(item);
        }
    }
    if train_items.is_empty() || dev_items.is_empty() {
        return Err(CliError::Input(format!(
            "split produced {} train / {} dev windows; both must be non-empty",
            train_items.len(),
            dev_items.len()
        )));
    }
    let distinct_train: std::collections::BTreeSet<usize> =
        train_items.iter().map(|(_, l)| *l).collect();
    if distinct_train.len() < 2 {
        return Err(CliError::Input(
            "degenerate label distribution: training split holds a single class".into(),
        ));
    }

    let n_layers = samples[0].vector_per_layer.len();
    let in_dim = samples[0].vector_per_layer[0].len();

    let mask_indices: Option<Vec<usize>> = if let Some(explicit) = &section.layer_mask {
        Some(explicit.clone())
    } else if let (Some(k), Some(csv)) = (section.best_k, &section.weights_csv) {
        let weights = read_weights_csv(&loaded.resolve(csv))?;
        Some(select_best_k_layers(&weights, k))
    } else {
        None
    };
    let mask = mask_indices
        .as_ref()
        .map(|idx| mask_from_indices(n_layers, idx));

    let tasks = vec![TaskDef {
        id: section.task_id.clone(),
        n_classes: section.classes.len(),
    }];
    let cfg = loaded.config.train.to_config(loaded.config.seed, tasks);

    let split = SplitSizes {
        train: train_items.len(),
        dev: dev_items.len(),
        test: test_items.len(),
    };
    let train_data = MultiTaskData::single_task(train_items);
    let dev_data = MultiTaskData::single_task(dev_items);

    let (probe, diary) = train_probe(&train_data, &dev_data, mask, n_layers, in_dim, &cfg)?;
    let weights = extract_layer_weights(&probe);
    let (dev_accuracy, dev_macro_f1) = evaluate(&probe, &dev_data.per_task[0], &section.task_id)?;
    let (test_accuracy, test_macro_f1) = if test_items.is_empty() {
        (None, None)
    } else {
        let (a, f) = evaluate(&probe, &test_items, &section.task_id)?;
        (Some(a), Some(f))
    };

    let mut csv = String::from("layer,weight\n");
    for (layer, w) in weights.iter().enumerate() {
        writeln!(csv, "{layer},{w}").unwrap();
    }
    write_output(&out_dir.join("layer_weights.csv"), &csv)?;

    let report = ProbeReport {
        seed: loaded.config.seed,
        task_id: section.task_id.clone(),
        classes: section.classes.clone(),
        split,
        layer_mask: mask_indices,
        epochs: diary,
        dev_accuracy,
        dev_macro_f1,
        test_accuracy,
        test_macro_f1,
        layer_weights: weights.clone(),
    };
    write_output(&out_dir.join("probe_metrics.json"), &to_json_pretty(&report))?;
    save_probe(out_dir.join("probe.lprb"), &probe)?;

    if section.emit_svg || force_svg {
        let bars: Vec<(String, f64)> = weights
            .iter()
            .enumerate()
            .map(|(l, &w)| (l.to_string(), w))
            .collect();
        let svg = bar_chart("Learned layer weights", "layer", "weight", &bars);
        write_output(&out_dir.join("layer_weights.svg"), &svg)?;
    }
    Ok(())
}
