//! `report`: aggregate whatever command outputs exist in the output
//! directory into one markdown summary.

use std::fmt::Write as _;
use std::path::Path;

use serde_json::Value;

use super::write_output;
use crate::error::CliError;

fn load_json(path: &Path) -> Option<Value> {
    let text = std::fs::read_to_string(path).ok()?;
    serde_json::from_str(&text).ok()
}

fn layer_table(md: &mut String, results: &[Value], key: &str) {
    md.push_str("| series | best layer | best score |\n|---|---|---|\n");
    for r in results {
        let name = r[key].as_str().unwrap_or("?");
        let scores: Vec<f64> = r["scores"]
            .as_array()
            .map(|a| a.iter().filter_map(Value::as_f64).collect())
            .unwrap_or_default();
        if let Some((layer, best)) = scores
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        {
            let _ = writeln!(md, "| {name} | {layer} | {best:.4} |");
        }
    }
    md.push('\n');
}

pub fn run(out_dir: &Path) -> Result<(), CliError> {
    let mut md = String::from("# Analysis report\n\n");
    let mut found_any = false;

    if let Some(v) = load_json(&out_dir.join("cca_phoneme.json")) {
        found_any = true;
        md.push_str("## Layer-wise CCA with phone labels\n\n");
        if let Some(results) = v["results"].as_array() {
            layer_table(&mut md, results, "corpus");
        }
    }
    if let Some(v) = load_json(&out_dir.join("cca_paraling.json")) {
        found_any = true;
        md.push_str("## Layer-wise CCA with paralinguistic groups\n\n");
        if let Some(results) = v["results"].as_array() {
            layer_table(&mut md, results, "group");
        }
    }
    if let Some(v) = load_json(&out_dir.join("probe_metrics.json")) {
        found_any = true;
        md.push_str("## Probe\n\n");
        if let (Some(acc), Some(f1)) = (v["dev_accuracy"].as_f64(), v["dev_macro_f1"].as_f64()) {
            let _ = writeln!(md, "- dev accuracy {acc:.4}, dev macro F1 {f1:.4}");
        }
        if let (Some(acc), Some(f1)) = (v["test_accuracy"].as_f64(), v["test_macro_f1"].as_f64()) {
            let _ = writeln!(md, "- test accuracy {acc:.4}, test macro F1 {f1:.4}");
        }
        if let Some(weights) = v["layer_weights"].as_array() {
            let ws: Vec<f64> = weights.iter().filter_map(Value::as_f64).collect();
            if let Some((layer, best)) = ws
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            {
                let _ = writeln!(md, "- heaviest layer: {layer} (weight {best:.4})");
            }
        }
        md.push('\n');
    }
    if let Some(v) = load_json(&out_dir.join("score_report.json")) {
        found_any = true;
        md.push_str("## Recognition scoring\n\n");
        if let Some(systems) = v["systems"].as_array() {
            md.push_str("| system | PER (%) |\n|---|---|\n");
            for s in systems {
                let _ = writeln!(
                    md,
                    "| {} | {:.2} |",
                    s["name"].as_str().unwrap_or("?"),
                    s["per_pct"].as_f64().unwrap_or(f64::NAN)
                );
            }
            md.push('\n');
        }
        if v["mapsswe"].is_object() {
            let m = &v["mapsswe"];
            let _ = writeln!(
                md,
                "Matched-pairs test: W = {:.4}, p = {:.6}{}, {} segments\n",
                m["w"].as_f64().unwrap_or(f64::NAN),
                m["p"].as_f64().unwrap_or(f64::NAN),
                m["stars"].as_str().map(|s| format!(" {s}")).unwrap_or_default(),
                m["n_segments"].as_u64().unwrap_or(0),
            );
        }
    }

    if !found_any {
        md.push_str("No command outputs found in this directory.\n");
    }
    write_output(&out_dir.join("report.md"), &md)?;
    Ok(())
}
