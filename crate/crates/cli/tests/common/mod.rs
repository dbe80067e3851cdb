//! Shared synthetic-corpus builders for the CLI integration and acceptance
//! suites.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use layerprobe_core::io::{
    write_alignments, write_manifest, write_repr_tensor, AlignmentEntry, PhoneInventory,
    ReprTensor, UtteranceManifest,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const PHONES: [&str; 3] = ["ɑ", "ɛ", "s"];
pub const N_LAYERS: usize = 12;
pub const N_FRAMES: usize = 100;
pub const DIM: usize = 8;
pub const HOP_S: f64 = 0.02;
pub const OFFSET_S: f64 = 0.0125;
pub const PHONE_LAYER: usize = 7;
pub const WINDOW_LAYER: usize = 5;

pub fn randn(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.random::<f64>().max(1e-12);
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Writes a corpus whose layer 7 encodes phone identity and layer 5 encodes
/// the vocalization label; everything else is loud noise. Phones tile
/// [0.1, 1.9) in 0.2 s steps (rotating through the inventory), and the
/// first/second half of each utterance carry `cry`/`fuss` labels (swapped
/// for odd utterances).
pub fn write_synthetic_corpus(dir: &Path, seed: u64) {
    std::fs::create_dir_all(dir).unwrap();
    let inventory = PhoneInventory::new(PHONES.iter().map(|s| s.to_string()).collect()).unwrap();
    inventory.write_file(dir.join("phones.txt")).unwrap();

    let groups = ["f1", "f1", "f2", "f3"];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut manifest = Vec::new();
    let mut alignments = Vec::new();
    let mut track_lines = Vec::new();

    for (u, group) in groups.iter().enumerate() {
        let id = format!("u{}", u + 1);
        let mut phones = Vec::new();
        for k in 0..9 {
            let start = 0.1 + 0.2 * k as f64;
            let phone = PHONES[(k + u) % PHONES.len()];
            phones.push(AlignmentEntry {
                utterance_id: id.clone(),
                phone: phone.to_string(),
                start_s: start,
                end_s: start + 0.2,
            });
        }
        let (first, second) = if u % 2 == 0 { ("cry", "fuss") } else { ("fuss", "cry") };
        let track = vec![
            (0.0, 1.0, first.to_string()),
            (1.0, 2.0, second.to_string()),
        ];

        // Build the tensor: frame centers at OFFSET_S + i * HOP_S.
        let mut values = vec![0.0f32; N_LAYERS * N_FRAMES * DIM];
        for layer in 0..N_LAYERS {
            for frame in 0..N_FRAMES {
                let t = OFFSET_S + frame as f64 * HOP_S;
                for d in 0..DIM {
                    let mut v = 2.0 * randn(&mut rng);
                    if layer == PHONE_LAYER {
                        v = 0.3 * randn(&mut rng);
                        if let Some(p) = phones
                            .iter()
                            .find(|p| t >= p.start_s && t < p.end_s)
                            .and_then(|p| inventory.phone_index(&p.phone))
                        {
                            if d == p {
                                v += 3.0;
                            }
                        }
                    } else if layer == WINDOW_LAYER {
                        v = 0.3 * randn(&mut rng);
                        if d == 5 {
                            let label = track
                                .iter()
                                .find(|(s, e, _)| t >= *s && t < *e)
                                .map(|(_, _, l)| l.as_str());
                            v += match label {
                                Some("cry") => 2.0,
                                Some("fuss") => -2.0,
                                _ => 0.0,
                            };
                        }
                    }
                    values[(layer * N_FRAMES + frame) * DIM + d] = v as f32;
                }
            }
        }
        let tensor =
            ReprTensor::new(N_LAYERS, N_FRAMES, DIM, HOP_S, OFFSET_S, values).unwrap();
        write_repr_tensor(dir.join(format!("{id}.lrep")), &tensor).unwrap();

        manifest.push(UtteranceManifest {
            utterance_id: id.clone(),
            group_key: group.to_string(),
            duration_s: 2.0,
            audio_path: None,
            repr_path: Some(format!("{id}.lrep")),
        });
        alignments.extend(phones.iter().cloned());
        for (s, e, l) in &track {
            track_lines.push(format!("{id}\t{l}\t{s}\t{e}"));
        }
    }

    write_manifest(dir.join("manifest.jsonl"), &manifest).unwrap();
    write_alignments(dir.join("align.tsv"), &alignments).unwrap();
    std::fs::write(dir.join("track.tsv"), track_lines.join("\n") + "\n").unwrap();
}

/// Config driving cca-phoneme and the window pool + probe on the synthetic
/// corpus.
pub fn write_pipeline_config(dir: &Path, seed: u64) -> PathBuf {
    let config = format!(
        r#"seed = {seed}
out_dir = "out"

[train]
lr = 0.5
epochs = 5
batch = 8
hidden = 16

[pool]
mode = "windows"
manifest = "manifest.jsonl"
track = "track.tsv"
win_s = 0.4
hop_s = 0.2
core_s = 0.2
base = "win"

[cca_phoneme]
inventory = "phones.txt"
per_phone_cap = 600

[[cca_phoneme.corpora]]
name = "synthetic"
manifest = "manifest.jsonl"
alignments = "align.tsv"

[probe]
pooled_dir = "pooled"
pooled_base = "win"
manifest = "manifest.jsonl"
task_id = "vc"
classes = ["cry", "fuss"]
dev_groups = ["f2"]
test_groups = ["f3"]
"#
    );
    let path = dir.join("layerprobe.toml");
    std::fs::write(&path, config).unwrap();
    path
}

/// Runs the built binary with a clean environment for the output override.
pub fn run_cli(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_layerprobe"))
        .args(args)
        .current_dir(cwd)
        .env_remove("LAYERPROBE_OUT")
        .output()
        .expect("binary runs")
}

pub fn assert_success(out: &Output) {
    assert!(
        out.status.success(),
        "command failed ({:?}):\n{}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
}
