//! Pooling of frame-level representations into phoneme-level and
//! utterance/window-level vectors, plus windowing of continuous label tracks.
//!
//! Frame membership is decided by frame centers against half-open intervals:
//! frame `i` of a tensor is centered at `offset + i * hop`, and an interval
//! `[a, b)` contains the frame iff `a <= center < b`.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::io::{
    read_repr_tensor, write_repr_tensor, AlignmentEntry, LrepError, PhoneInventory, ReprTensor,
};

#[derive(Debug, Error)]
pub enum PoolError {
    #[error("interval [{start_s}, {end_s}) lies outside the tensor's time extent")]
    OutsideExtent { start_s: f64, end_s: f64 },
    #[error("span selects no frames")]
    EmptySpan,
    #[error("label track intervals overlap near t={at_s}")]
    OverlappingTrack { at_s: f64 },
    #[error("invalid windowing: {0}")]
    InvalidWindowing(String),
    #[error("empty input")]
    EmptyInput,
    #[error("phone {0:?} not in inventory")]
    UnknownPhone(String),
    #[error("samples disagree on shape: expected {expected} layers x {dim} dims")]
    ShapeMismatch { expected: usize, dim: usize },
    #[error("per_phone_cap must be >= 1")]
    BadCap,
    #[error("tensor container error: {0}")]
    Lrep(#[from] LrepError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("row index line {line}: {reason}")]
    BadRowIndex { line: usize, reason: String },
}

/// One phoneme's pooled representation: one `dim`-length vector per layer.
#[derive(Debug, Clone, PartialEq)]
pub struct PhonemeSample {
    pub utterance_id: String,
    pub phone: String,
    pub vector_per_layer: Vec<Vec<f32>>,
}

/// One fixed-length window's pooled representation and its majority label.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowSample {
    pub utterance_id: String,
    pub start_s: f64,
    pub label: String,
    pub vector_per_layer: Vec<Vec<f32>>,
}

/// Indices of frames whose centers fall in `[lo, hi)`.
fn frames_in(tensor: &ReprTensor, lo: f64, hi: f64) -> Vec<usize> {
    (0..tensor.n_frames())
        .filter(|&i| {
            let c = tensor.frame_center_s(i);
            c >= lo && c < hi
        })
        .collect()
}

fn mean_over_frames(tensor: &ReprTensor, frames: &[usize]) -> Vec<Vec<f32>> {
    let dim = tensor.dim();
    let mut out = Vec::with_capacity(tensor.n_layers());
    for layer in 0..tensor.n_layers() {
        let mut acc = vec![0.0f64; dim];
        for &f in frames {
            for (a, v) in acc.iter_mut().zip(tensor.frame(layer, f)) {
                *a += *v as f64;
            }
        }
        let n = frames.len() as f64;
        out.push(acc.into_iter().map(|a| (a / n) as f32).collect());
    }
    out
}

fn check_extent(tensor: &ReprTensor, start_s: f64, end_s: f64) -> Result<(), PoolError> {
    // One-frame tolerance on either side of the span of frame centers.
    let hop = tensor.frame_hop_s();
    if tensor.n_frames() == 0 {
        return Err(PoolError::OutsideExtent { start_s, end_s });
    }
    let lo = tensor.frame_center_s(0) - hop;
    let hi = tensor.frame_center_s(tensor.n_frames() - 1) + hop;
    if end_s <= lo || start_s >= hi {
        return Err(PoolError::OutsideExtent { start_s, end_s });
    }
    Ok(())
}

/// Pools one aligned phone over the central third of its interval: the mean
/// per layer over frames centered in `[start + d/3, end - d/3)` with
/// `d = end - start`. When no frame center falls inside, the single frame
/// whose center is nearest the interval midpoint is used instead, so
/// ultra-short phones are kept rather than dropped.
pub fn central_third_pool(
    tensor: &ReprTensor,
    entry: &AlignmentEntry,
) -> Result<PhonemeSample, PoolError> {
    check_extent(tensor, entry.start_s, entry.end_s)?;
    let d = entry.end_s - entry.start_s;
    let lo = entry.start_s + d / 3.0;
    let hi = entry.end_s - d / 3.0;
    let mut frames = frames_in(tensor, lo, hi);
    if frames.is_empty() {
        let mid = 0.5 * (entry.start_s + entry.end_s);
        let nearest = (0..tensor.n_frames())
            .min_by(|&a, &b| {
                let da = (tensor.frame_center_s(a) - mid).abs();
                let db = (tensor.frame_center_s(b) - mid).abs();
                da.partial_cmp(&db).unwrap()
            })
            .expect("extent check guarantees at least one frame");
        frames = vec![nearest];
    }
    Ok(PhonemeSample {
        utterance_id: entry.utterance_id.clone(),
        phone: entry.phone.clone(),
        vector_per_layer: mean_over_frames(tensor, &frames),
    })
}

/// Arithmetic mean per layer over the frames in `span` (whole utterance when
/// `None`). Errors when the span selects no frames.
pub fn utterance_mean_pool(
    tensor: &ReprTensor,
    span: Option<(f64, f64)>,
) -> Result<Vec<Vec<f32>>, PoolError> {
    let frames = match span {
        None => (0..tensor.n_frames()).collect::<Vec<_>>(),
        Some((start_s, end_s)) => {
            if !(end_s > start_s) {
                return Err(PoolError::EmptySpan);
            }
            check_extent(tensor, start_s, end_s)?;
            frames_in(tensor, start_s, end_s)
        }
    };
    if frames.is_empty() {
        return Err(PoolError::EmptySpan);
    }
    Ok(mean_over_frames(tensor, &frames))
}

/// A window's label assignment: window start time and the majority label of
/// its centered core, if the core has any labeled duration.
pub type WindowLabel = (f64, Option<String>);

/// Slides `win_s` windows every `hop_s` from 0 while they fit in `total_s`,
/// and labels each by the duration-majority label within the centered
/// `core_s` sub-interval. Ties break to the label appearing earliest in the
/// core; an unlabeled core yields `None`.
pub fn window_label_track(
    track: &[(f64, f64, String)],
    total_s: f64,
    win_s: f64,
    hop_s: f64,
    core_s: f64,
) -> Result<Vec<WindowLabel>, PoolError> {
    if !(win_s > 0.0) || !(hop_s > 0.0) || !(core_s > 0.0) {
        return Err(PoolError::InvalidWindowing(
            "win_s, hop_s, core_s must all be > 0".into(),
        ));
    }
    if win_s < core_s {
        return Err(PoolError::InvalidWindowing(format!(
            "win_s {win_s} must be >= core_s {core_s}"
        )));
    }
    for (start, end, _) in track {
        if !(end > start) {
            return Err(PoolError::InvalidWindowing(format!(
                "track interval [{start}, {end}) is empty"
            )));
        }
    }
    let mut sorted: Vec<&(f64, f64, String)> = track.iter().collect();
    sorted.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    for pair in sorted.windows(2) {
        if pair[0].1 > pair[1].0 + 1e-12 {
            return Err(PoolError::OverlappingTrack { at_s: pair[1].0 });
        }
    }

    let mut out = Vec::new();
    let mut k = 0usize;
    loop {
        let ws = k as f64 * hop_s;
        if ws + win_s > total_s + 1e-9 {
            break;
        }
        let core_lo = ws + (win_s - core_s) / 2.0;
        let core_hi = core_lo + core_s;
        // Duration and earliest appearance per label inside the core.
        let mut tally: Vec<(&str, f64, f64)> = Vec::new(); // (label, duration, earliest)
        for (start, end, label) in track {
            let lo = start.max(core_lo);
            let hi = end.min(core_hi);
            if hi > lo {
                match tally.iter_mut().find(|(l, _, _)| *l == label.as_str()) {
                    Some(entry) => {
                        entry.1 += hi - lo;
                        entry.2 = entry.2.min(lo);
                    }
                    None => tally.push((label, hi - lo, lo)),
                }
            }
        }
        let label = tally
            .iter()
            .max_by(|a, b| {
                a.1.partial_cmp(&b.1)
                    .unwrap()
                    .then(b.2.partial_cmp(&a.2).unwrap())
            })
            .map(|(l, _, _)| l.to_string());
        out.push((ws, label));
        k += 1;
    }
    Ok(out)
}

/// Row index entry for a serialized phoneme pool.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PhonemeRow {
    pub row: usize,
    pub utterance_id: String,
    pub phone: String,
}

/// Row index entry for a serialized window pool.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WindowRow {
    pub row: usize,
    pub utterance_id: String,
    pub start_s: f64,
    pub label: String,
}

/// A phoneme dataset ready for CCA: one design matrix per layer sharing row
/// order, and the one-hot phone matrix.
#[derive(Debug, Clone)]
pub struct PhonemeDataset {
    pub per_layer: Vec<DMatrix<f64>>,
    pub one_hot: DMatrix<f64>,
    pub rows: Vec<PhonemeRow>,
}

/// Subsamples at most `per_phone_cap` samples per phone (uniformly, without
/// replacement, deterministic under `seed`) and assembles per-layer design
/// matrices plus the one-hot label matrix. Row order is identical across
/// layers: phones in inventory order, samples in input order within a phone.
pub fn build_phoneme_dataset(
    samples: &[PhonemeSample],
    inventory: &PhoneInventory,
    per_phone_cap: usize,
    seed: u64,
) -> Result<PhonemeDataset, PoolError> {
    if samples.is_empty() {
        return Err(PoolError::EmptyInput);
    }
    if per_phone_cap == 0 {
        return Err(PoolError::BadCap);
    }
    let n_layers = samples[0].vector_per_layer.len();
    let dim = samples[0].vector_per_layer[0].len();
    for s in samples {
        if s.vector_per_layer.len() != n_layers
            || s.vector_per_layer.iter().any(|v| v.len() != dim)
        {
            return Err(PoolError::ShapeMismatch {
                expected: n_layers,
                dim,
            });
        }
    }

    let mut by_phone: Vec<Vec<usize>> = vec![Vec::new(); inventory.len()];
    for (i, s) in samples.iter().enumerate() {
        let p = inventory
            .phone_index(&s.phone)
            .ok_or_else(|| PoolError::UnknownPhone(s.phone.clone()))?;
        by_phone[p].push(i);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen: Vec<(usize, usize)> = Vec::new(); // (sample index, phone index)
    for (phone_idx, indices) in by_phone.iter().enumerate() {
        if indices.len() > per_phone_cap {
            let mut picked = rand::seq::index::sample(&mut rng, indices.len(), per_phone_cap)
                .into_vec();
            picked.sort_unstable();
            chosen.extend(picked.into_iter().map(|k| (indices[k], phone_idx)));
        } else {
            chosen.extend(indices.iter().map(|&k| (k, phone_idx)));
        }
    }

    let n = chosen.len();
    let mut per_layer = vec![DMatrix::<f64>::zeros(n, dim); n_layers];
    let mut one_hot = DMatrix::<f64>::zeros(n, inventory.len());
    let mut rows = Vec::with_capacity(n);
    for (row, &(sample_idx, phone_idx)) in chosen.iter().enumerate() {
        let s = &samples[sample_idx];
        for (layer, vec) in s.vector_per_layer.iter().enumerate() {
            for (col, v) in vec.iter().enumerate() {
                per_layer[layer][(row, col)] = *v as f64;
            }
        }
        one_hot[(row, phone_idx)] = 1.0;
        rows.push(PhonemeRow {
            row,
            utterance_id: s.utterance_id.clone(),
            phone: s.phone.clone(),
        });
    }

    Ok(PhonemeDataset {
        per_layer,
        one_hot,
        rows,
    })
}

fn pooled_layer_path(dir: &Path, base: &str, layer: usize) -> std::path::PathBuf {
    dir.join(format!("{base}_layer{layer:02}.lrep"))
}

fn pooled_rows_path(dir: &Path, base: &str) -> std::path::PathBuf {
    dir.join(format!("{base}_rows.jsonl"))
}

fn write_layer_matrices(
    dir: &Path,
    base: &str,
    vectors: &[&Vec<Vec<f32>>],
) -> Result<(usize, usize), PoolError> {
    let n_layers = vectors[0].len();
    let dim = vectors[0][0].len();
    for layer in 0..n_layers {
        let mut values = Vec::with_capacity(vectors.len() * dim);
        for per_layer in vectors {
            values.extend_from_slice(&per_layer[layer]);
        }
        // A pooled layer is a 1-layer tensor: one "frame" per dataset row.
        let t = ReprTensor::new(1, vectors.len(), dim, 1.0, 0.0, values)?;
        write_repr_tensor(pooled_layer_path(dir, base, layer), &t)?;
    }
    Ok((n_layers, dim))
}

fn read_layer_matrices(dir: &Path, base: &str) -> Result<Vec<ReprTensor>, PoolError> {
    let mut layers = Vec::new();
    loop {
        let path = pooled_layer_path(dir, base, layers.len());
        if !path.exists() {
            break;
        }
        layers.push(read_repr_tensor(path)?);
    }
    if layers.is_empty() {
        return Err(PoolError::EmptyInput);
    }
    Ok(layers)
}

/// Serializes a phoneme pool: one 1-layer `LREP` file per layer index plus a
/// JSON-lines row index.
pub fn write_phoneme_pool(
    dir: impl AsRef<Path>,
    base: &str,
    samples: &[PhonemeSample],
) -> Result<(), PoolError> {
    if samples.is_empty() {
        return Err(PoolError::EmptyInput);
    }
    let dir = dir.as_ref();
    let vectors: Vec<&Vec<Vec<f32>>> = samples.iter().map(|s| &s.vector_per_layer).collect();
    write_layer_matrices(dir, base, &vectors)?;
    let mut w = BufWriter::new(File::create(pooled_rows_path(dir, base))?);
    for (row, s) in samples.iter().enumerate() {
        let rec = PhonemeRow {
            row,
            utterance_id: s.utterance_id.clone(),
            phone: s.phone.clone(),
        };
        writeln!(w, "{}", serde_json::to_string(&rec).expect("serializable"))?;
    }
    w.flush()?;
    Ok(())
}

/// Reads back a phoneme pool written by [`write_phoneme_pool`].
pub fn read_phoneme_pool(
    dir: impl AsRef<Path>,
    base: &str,
) -> Result<Vec<PhonemeSample>, PoolError> {
    let dir = dir.as_ref();
    let layers = read_layer_matrices(dir, base)?;
    let n = layers[0].n_frames();
    let reader = BufReader::new(File::open(pooled_rows_path(dir, base))?);
    let mut samples = Vec::with_capacity(n);
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: PhonemeRow = serde_json::from_str(&line).map_err(|e| PoolError::BadRowIndex {
            line: idx + 1,
            reason: e.to_string(),
        })?;
        if rec.row >= n {
            return Err(PoolError::BadRowIndex {
                line: idx + 1,
                reason: format!("row {} out of range ({n} rows)", rec.row),
            });
        }
        samples.push(PhonemeSample {
            utterance_id: rec.utterance_id,
            phone: rec.phone,
            vector_per_layer: layers
                .iter()
                .map(|t| t.frame(0, rec.row).to_vec())
                .collect(),
        });
    }
    if samples.len() != n {
        return Err(PoolError::BadRowIndex {
            line: 0,
            reason: format!("row index holds {} rows, tensors hold {n}", samples.len()),
        });
    }
    Ok(samples)
}

/// Serializes a window pool in the same layout as [`write_phoneme_pool`].
pub fn write_window_pool(
    dir: impl AsRef<Path>,
    base: &str,
    samples: &[WindowSample],
) -> Result<(), PoolError> {
    if samples.is_empty() {
        return Err(PoolError::EmptyInput);
    }
    let dir = dir.as_ref();
    let vectors: Vec<&Vec<Vec<f32>>> = samples.iter().map(|s| &s.vector_per_layer).collect();
    write_layer_matrices(dir, base, &vectors)?;
    let mut w = BufWriter::new(File::create(pooled_rows_path(dir, base))?);
    for (row, s) in samples.iter().enumerate() {
        let rec = WindowRow {
            row,
            utterance_id: s.utterance_id.clone(),
            start_s: s.start_s,
            label: s.label.clone(),
        };
        writeln!(w, "{}", serde_json::to_string(&rec).expect("serializable"))?;
    }
    w.flush()?;
    Ok(())
}

/// Reads back a window pool written by [`write_window_pool`].
pub fn read_window_pool(
    dir: impl AsRef<Path>,
    base: &str,
) -> Result<Vec<WindowSample>, PoolError> {
    let dir = dir.as_ref();
    let layers = read_layer_matrices(dir, base)?;
    let n = layers[0].n_frames();
    let reader = BufReader::new(File::open(pooled_rows_path(dir, base))?);
    let mut samples = Vec::with_capacity(n);
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: WindowRow = serde_json::from_str(&line).map_err(|e| PoolError::BadRowIndex {
            line: idx + 1,
            reason: e.to_string(),
        })?;
        if rec.row >= n {
            return Err(PoolError::BadRowIndex {
                line: idx + 1,
                reason: format!("row {} out of range ({n} rows)", rec.row),
            });
        }
        samples.push(WindowSample {
            utterance_id: rec.utterance_id,
            start_s: rec.start_s,
            label: rec.label,
            vector_per_layer: layers
                .iter()
                .map(|t| t.frame(0, rec.row).to_vec())
                .collect(),
        });
    }
    if samples.len() != n {
        return Err(PoolError::BadRowIndex {
            line: 0,
            reason: format!("row index holds {} rows, tensors hold {n}", samples.len()),
        });
    }
    Ok(samples)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tensor_with(
        n_layers: usize,
        n_frames: usize,
        dim: usize,
        f: impl Fn(usize, usize, usize) -> f32,
    ) -> ReprTensor {
        let mut values = Vec::with_capacity(n_layers * n_frames * dim);
        for l in 0..n_layers {
            for t in 0..n_frames {
                for d in 0..dim {
                    values.push(f(l, t, d));
                }
            }
        }
        ReprTensor::new(n_layers, n_frames, dim, 0.02, 0.0125, values).unwrap()
    }

    fn entry(start_s: f64, end_s: f64) -> AlignmentEntry {
        AlignmentEntry {
            utterance_id: "u1".into(),
            phone: "ɑ".into(),
            start_s,
            end_s,
        }
    }

    #[test]
    fn constant_tensor_pools_to_constant() {
        let t = tensor_with(3, 30, 4, |_, _, _| 2.5);
        let s = central_third_pool(&t, &entry(0.1, 0.4)).unwrap();
        assert_eq!(s.vector_per_layer.len(), 3);
        for v in &s.vector_per_layer {
            assert!(v.iter().all(|&x| (x - 2.5).abs() < 1e-6));
        }
    }

    #[test]
    fn central_third_selects_frames_10_to_14() {
        // hop 0.02, offset 0.0125: centers 0.2125..0.2925 lie in [0.20, 0.30).
        let t = tensor_with(1, 30, 1, |_, frame, _| frame as f32);
        let s = central_third_pool(&t, &entry(0.10, 0.40)).unwrap();
        let expected = (10..=14).sum::<usize>() as f32 / 5.0;
        assert!((s.vector_per_layer[0][0] - expected).abs() < 1e-6);
    }

    #[test]
    fn short_interval_falls_back_to_nearest_frame() {
        // Centers at 0.0125, 0.0325, 0.0525; interval shorter than a hop
        // around 0.034 has an empty central third.
        let t = tensor_with(1, 3, 1, |_, frame, _| frame as f32 * 10.0);
        let s = central_third_pool(&t, &entry(0.033, 0.035)).unwrap();
        assert_eq!(s.vector_per_layer[0][0], 10.0);
    }

    #[test]
    fn interval_outside_extent_errors() {
        let t = tensor_with(1, 3, 1, |_, _, _| 0.0);
        assert!(matches!(
            central_third_pool(&t, &entry(5.0, 6.0)),
            Err(PoolError::OutsideExtent { .. })
        ));
    }

    #[test]
    fn utterance_mean_matches_hand_values() {
        let t = ReprTensor::new(1, 2, 1, 0.02, 0.0125, vec![0.0, 2.0]).unwrap();
        let pooled = utterance_mean_pool(&t, None).unwrap();
        assert_eq!(pooled[0][0], 1.0);

        // Span covering exactly the second frame (center 0.0325).
        let pooled = utterance_mean_pool(&t, Some((0.03, 0.04))).unwrap();
        assert_eq!(pooled[0][0], 2.0);

        assert!(matches!(
            utterance_mean_pool(&t, Some((0.04, 0.04))),
            Err(PoolError::EmptySpan)
        ));
    }

    #[test]
    fn window_labels_follow_majority_rule() {
        let track = vec![(0.0, 10.0, "cry".to_string())];
        let wins = window_label_track(&track, 10.0, 2.0, 0.2, 1.0).unwrap();
        assert_eq!(wins.len(), 41);
        assert!(wins.iter().all(|(_, l)| l.as_deref() == Some("cry")));
    }

    #[test]
    fn window_core_majority_by_duration() {
        // Window 0: core [0.5, 1.5). fuss covers [0.5, 1.1) = 0.6 s,
        // babble covers [1.1, 1.5) = 0.4 s.
        let track = vec![
            (0.2, 1.1, "fuss".to_string()),
            (1.1, 2.0, "babble".to_string()),
        ];
        let wins = window_label_track(&track, 2.0, 2.0, 0.2, 1.0).unwrap();
        assert_eq!(wins.len(), 1);
        assert_eq!(wins[0].1.as_deref(), Some("fuss"));
    }

    #[test]
    fn unlabeled_core_yields_none() {
        let track = vec![(1.6, 2.0, "cry".to_string())];
        let wins = window_label_track(&track, 2.0, 2.0, 0.2, 1.0).unwrap();
        assert_eq!(wins[0].1, None);
    }

    #[test]
    fn tie_breaks_to_earliest_label_in_core() {
        // Both labels cover exactly 0.5 s of the [0.5, 1.5) core.
        let track = vec![
            (0.5, 1.0, "b".to_string()),
            (1.0, 1.5, "a".to_string()),
        ];
        let wins = window_label_track(&track, 2.0, 2.0, 0.2, 1.0).unwrap();
        assert_eq!(wins[0].1.as_deref(), Some("b"));
    }

    #[test]
    fn overlapping_track_rejected() {
        let track = vec![
            (0.0, 1.0, "a".to_string()),
            (0.9, 2.0, "b".to_string()),
        ];
        assert!(matches!(
            window_label_track(&track, 2.0, 2.0, 0.2, 1.0),
            Err(PoolError::OverlappingTrack { .. })
        ));
    }

    fn sample(phone: &str, seed_val: f32) -> PhonemeSample {
        PhonemeSample {
            utterance_id: "u".into(),
            phone: phone.into(),
            vector_per_layer: vec![vec![seed_val, seed_val + 1.0]; 2],
        }
    }

    fn small_inventory() -> PhoneInventory {
        PhoneInventory::new(vec!["ɑ".into(), "ɛ".into()]).unwrap()
    }

    #[test]
    fn cap_limits_per_phone_rows() {
        let samples: Vec<PhonemeSample> = (0..1000).map(|i| sample("ɑ", i as f32)).collect();
        let ds = build_phoneme_dataset(&samples, &small_inventory(), 600, 7).unwrap();
        assert_eq!(ds.per_layer[0].nrows(), 600);
        assert_eq!(ds.one_hot.nrows(), 600);
        // One-hot rows sum to exactly 1.
        for r in 0..ds.one_hot.nrows() {
            assert_eq!(ds.one_hot.row(r).sum(), 1.0);
        }
    }

    #[test]
    fn cap_larger_than_available_keeps_all() {
        let samples: Vec<PhonemeSample> = (0..10).map(|i| sample("ɛ", i as f32)).collect();
        let ds = build_phoneme_dataset(&samples, &small_inventory(), 600, 7).unwrap();
        assert_eq!(ds.per_layer[0].nrows(), 10);
    }

    #[test]
    fn same_seed_same_rows() {
        let samples: Vec<PhonemeSample> = (0..50)
            .map(|i| sample(if i % 2 == 0 { "ɑ" } else { "ɛ" }, i as f32))
            .collect();
        let a = build_phoneme_dataset(&samples, &small_inventory(), 10, 3).unwrap();
        let b = build_phoneme_dataset(&samples, &small_inventory(), 10, 3).unwrap();
        assert_eq!(a.per_layer[0], b.per_layer[0]);
        assert_eq!(
            a.rows.iter().map(|r| r.row).collect::<Vec<_>>(),
            b.rows.iter().map(|r| r.row).collect::<Vec<_>>()
        );
    }

    #[test]
    fn empty_input_rejected() {
        assert!(matches!(
            build_phoneme_dataset(&[], &small_inventory(), 5, 0),
            Err(PoolError::EmptyInput)
        ));
    }

    #[test]
    fn pool_serialization_round_trip() {
        let dir = std::env::temp_dir().join(format!("pool-rt-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let samples = vec![sample("ɑ", 1.0), sample("ɛ", 2.0)];
        write_phoneme_pool(&dir, "ph", &samples).unwrap();
        let back = read_phoneme_pool(&dir, "ph").unwrap();
        assert_eq!(samples, back);
    }
}
