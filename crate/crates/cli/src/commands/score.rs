//! `score`: phone error rate per system and, with two systems, the
//! matched-pairs segment significance test with Table-style stars.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use layerprobe_core::ctc::{
    mapsswe_test, per, read_phone_seqs, significance_stars, MapssweCase, PhoneSeqRecord,
};
use layerprobe_core::io::PhoneInventory;
use serde::Serialize;

use super::{require_files, to_json_pretty, write_output};
use crate::config::{LoadedConfig, ScoreSection};
use crate::error::CliError;

#[derive(Serialize)]
struct SystemScore {
    name: String,
    per_pct: f64,
}

#[derive(Serialize)]
struct MapssweJson {
    w: f64,
    p: f64,
    n_segments: usize,
    stars: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    better: Option<String>,
}

#[derive(Serialize)]
struct ScoreReport {
    systems: Vec<SystemScore>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mapsswe: Option<MapssweJson>,
}

fn to_indices(
    records: &[PhoneSeqRecord],
    inventory: &PhoneInventory,
    what: &str,
) -> Result<BTreeMap<String, Vec<usize>>, CliError> {
    let mut out = BTreeMap::new();
    for r in records {
        let mut seq = Vec::with_capacity(r.phones.len());
        for p in &r.phones {
            seq.push(inventory.ctc_class(p).ok_or_else(|| {
                CliError::Input(format!(
                    "{what}: utterance {:?} has phone {:?} not in inventory",
                    r.utterance_id, p
                ))
            })?);
        }
        if out.insert(r.utterance_id.clone(), seq).is_some() {
            return Err(CliError::Input(format!(
                "{what}: duplicate utterance id {:?}",
                r.utterance_id
            )));
        }
    }
    Ok(out)
}

fn check_same_ids(
    reference: &BTreeMap<String, Vec<usize>>,
    hyp: &BTreeMap<String, Vec<usize>>,
    what: &str,
) -> Result<(), CliError> {
    let missing: Vec<&String> = reference.keys().filter(|k| !hyp.contains_key(*k)).collect();
    let extra: Vec<&String> = hyp.keys().filter(|k| !reference.contains_key(*k)).collect();
    if !missing.is_empty() || !extra.is_empty() {
        return Err(CliError::Input(format!(
            "{what}: utterance id sets differ from reference (missing {:?}, extra {:?})",
            missing, extra
        )));
    }
    Ok(())
}

pub fn run(loaded: &LoadedConfig, out_dir: &Path) -> Result<(), CliError> {
    let section: ScoreSection = loaded
        .config
        .score
        .clone()
        .ok_or_else(|| CliError::Config("config has no [score] section".into()))?;

    let inventory_path = loaded.resolve(&section.inventory);
    let ref_path = loaded.resolve(&section.reference);
    let hyp_a_path = loaded.resolve(&section.hyp_a);
    let mut required = vec![
        ("inventory", inventory_path.clone()),
        ("reference", ref_path.clone()),
        ("hyp_a", hyp_a_path.clone()),
    ];
    let hyp_b_path = section.hyp_b.as_ref().map(|p| loaded.resolve(p));
    if let Some(p) = &hyp_b_path {
        required.push(("hyp_b", p.clone()));
    }
    let refs: Vec<(&str, &Path)> = required.iter().map(|(w, p)| (*w, p.as_path())).collect();
    require_files(&refs)?;

    let inventory = PhoneInventory::from_file(&inventory_path)?;
    let reference = to_indices(&read_phone_seqs(&ref_path)?, &inventory, "reference")?;
    let hyp_a = to_indices(&read_phone_seqs(&hyp_a_path)?, &inventory, "hyp_a")?;
    check_same_ids(&reference, &hyp_a, "hyp_a")?;

    let per_of = |hyp: &BTreeMap<String, Vec<usize>>| -> Result<f64, CliError> {
        Ok(per(reference
            .iter()
            .map(|(id, r)| (r.as_slice(), hyp[id].as_slice())))?)
    };

    let mut systems = vec![SystemScore {
        name: section.name_a.clone(),
        per_pct: per_of(&hyp_a)?,
    }];

    let mapsswe = if let Some(hyp_b_path) = &hyp_b_path {
        let hyp_b = to_indices(&read_phone_seqs(hyp_b_path)?, &inventory, "hyp_b")?;
        check_same_ids(&reference, &hyp_b, "hyp_b")?;
        systems.push(SystemScore {
            name: section.name_b.clone(),
            per_pct: per_of(&hyp_b)?,
        });
        let cases: Vec<MapssweCase> = reference
            .iter()
            .map(|(id, r)| MapssweCase {
                reference: r.clone(),
                hyp_a: hyp_a[id].clone(),
                hyp_b: hyp_b[id].clone(),
            })
            .collect();
        let outcome = mapsswe_test(&cases, section.segment_mode)?;
        let better = if outcome.p < 0.05 {
            if outcome.w > 0.0 {
                Some(section.name_b.clone()) // A made more errors
            } else {
                Some(section.name_a.clone())
            }
        } else {
            None
        };
        Some(MapssweJson {
            w: outcome.w,
            p: outcome.p,
            n_segments: outcome.n_segments,
            stars: significance_stars(outcome.p).to_string(),
            better,
        })
    } else {
        None
    };

    let mut csv = String::from("system,per_pct,stars\n");
    for s in &systems {
        // Stars annotate the better system of a significant pair.
        let stars = match &mapsswe {
            Some(m) if m.better.as_deref() == Some(s.name.as_str()) => m.stars.as_str(),
            _ => "",
        };
        writeln!(csv, "{},{},{}", s.name, s.per_pct, stars).unwrap();
    }
    write_output(&out_dir.join("per_table.csv"), &csv)?;

    let report = ScoreReport { systems, mapsswe };
    write_output(&out_dir.join("score_report.json"), &to_json_pretty(&report))?;
    Ok(())
}
