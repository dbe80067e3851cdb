//! `cca-phoneme`: layer-wise CCA between pooled phoneme representations and
//! one-hot phone labels, one sweep per corpus.

use std::fmt::Write as _;
use std::path::Path;

use layerprobe_core::cca::layerwise_cca_sweep;
use layerprobe_core::io::{read_alignments, read_manifest, PhoneInventory};
use layerprobe_core::pool::build_phoneme_dataset;
use serde::Serialize;

use super::{pool_corpus_phonemes, require_files, to_json_pretty, write_output};
use crate::config::{CcaPhonemeSection, LoadedConfig};
use crate::error::CliError;
use crate::svg::{line_chart, Series};

#[derive(Serialize)]
struct CorpusResult {
    corpus: String,
    n_samples: usize,
    n_dropped_phones: usize,
    scores: Vec<f64>,
}

#[derive(Serialize)]
struct PhonemeCcaReport {
    seed: u64,
    per_phone_cap: usize,
    cca: crate::config::CcaSection,
    results: Vec<CorpusResult>,
}

pub fn run(loaded: &LoadedConfig, out_dir: &Path, force_svg: bool) -> Result<(), CliError> {
    let section: CcaPhonemeSection = loaded
        .config
        .cca_phoneme
        .clone()
        .ok_or_else(|| CliError::Config("config has no [cca_phoneme] section".into()))?;
    if section.corpora.is_empty() {
        return Err(CliError::Config("[cca_phoneme] lists no corpora".into()));
    }

    let inventory_path = loaded.resolve(&section.inventory);
    let mut required = vec![("inventory", inventory_path.clone())];
    for c in &section.corpora {
        required.push(("manifest", loaded.resolve(&c.manifest)));
        required.push(("alignments", loaded.resolve(&c.alignments)));
    }
    let refs: Vec<(&str, &Path)> = required.iter().map(|(w, p)| (*w, p.as_path())).collect();
    require_files(&refs)?;

    let inventory = PhoneInventory::from_file(&inventory_path)?;
    let cca_cfg = loaded.config.cca.to_config(loaded.config.seed);

    let mut results = Vec::new();
    for corpus in &section.corpora {
        let manifest_path = loaded.resolve(&corpus.manifest);
        let manifest = read_manifest(&manifest_path)?;
        let manifest_dir = manifest_path.parent().unwrap_or(Path::new("."));
        let alignments = read_alignments(loaded.resolve(&corpus.alignments), &inventory)?;
        let (samples, dropped) =
            pool_corpus_phonemes(&manifest, manifest_dir, &alignments, &inventory)?;
        if samples.is_empty() {
            return Err(CliError::Input(format!(
                "corpus {:?} pooled no phones",
                corpus.name
            )));
        }
        let dataset = build_phoneme_dataset(
            &samples,
            &inventory,
            section.per_phone_cap,
            loaded.config.seed,
        )?;
        let sweep = layerwise_cca_sweep(&dataset.per_layer, &dataset.one_hot, &cca_cfg)?;
        results.push(CorpusResult {
            corpus: corpus.name.clone(),
            n_samples: dataset.one_hot.nrows(),
            n_dropped_phones: dropped,
            scores: sweep.into_iter().map(|(_, s)| s).collect(),
        });
    }

    let mut csv = String::from("corpus,layer,score\n");
    for r in &results {
        for (layer, score) in r.scores.iter().enumerate() {
            writeln!(csv, "{},{},{}", r.corpus, layer, score).unwrap();
        }
    }
    write_output(&out_dir.join("cca_phoneme.csv"), &csv)?;

    let report = PhonemeCcaReport {
        seed: loaded.config.seed,
        per_phone_cap: section.per_phone_cap,
        cca: loaded.config.cca.clone(),
        results,
    };
    write_output(&out_dir.join("cca_phoneme.json"), &to_json_pretty(&report))?;

    if section.emit_svg || force_svg {
        let series: Vec<Series> = report
            .results
            .iter()
            .map(|r| Series {
                name: r.corpus.clone(),
                points: r
                    .scores
                    .iter()
                    .enumerate()
                    .map(|(l, &s)| (l as f64, s))
                    .collect(),
            })
            .collect();
        let svg = line_chart("Layer-wise CCA with phone labels", "layer", "CCA score", &series);
        write_output(&out_dir.join("cca_phoneme.svg"), &svg)?;
    }
    Ok(())
}
