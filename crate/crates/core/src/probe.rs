//! Weighted-average-layer classification probes.
//!
//! A probe combines per-layer pooled vectors through softmax-normalized
//! layer weights (optionally restricted to a layer mask), feeds the weighted
//! sum through one rectified-linear hidden layer shared across tasks, and
//! classifies with per-task linear heads. Training is plain mini-batch
//! gradient descent on the average of per-task cross-entropies, with new-bob
//! learning-rate annealing driven by the development metric, returning the
//! parameters of the best development epoch.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Clamp applied to predicted probabilities inside cross-entropy.
const PROB_CLAMP: f64 = 1e-12;

const LPRB_MAGIC: [u8; 4] = *b"LPRB";
const LPRB_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ProbeError {
    #[error("unknown task id {0:?}")]
    UnknownTask(String),
    #[error("input shape {rows}x{cols} does not match probe ({layers} layers x {dim} dims)")]
    ShapeMismatch {
        rows: usize,
        cols: usize,
        layers: usize,
        dim: usize,
    },
    #[error("all task batches are empty")]
    AllBatchesEmpty,
    #[error("label {label} out of range for task with {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },
    #[error("training diverged (non-finite loss) at epoch {epoch}")]
    Diverged { epoch: usize },
    #[error("empty test set")]
    EmptyTestSet,
    #[error("invalid config: {0}")]
    BadConfig(String),
    #[error("layer mask excludes every layer")]
    EmptyMask,
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad probe file magic {0:?}")]
    BadMagic([u8; 4]),
    #[error("unsupported probe file version {0}")]
    BadVersion(u32),
    #[error("corrupt probe file: {0}")]
    Corrupt(String),
}

/// One classification task: a stable id and its class count.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskDef {
    pub id: String,
    pub n_classes: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub lr: f64,
    pub epochs: usize,
    pub batch: usize,
    pub seed: u64,
    pub hidden: usize,
    pub newbob_factor: f64,
    pub newbob_improvement_threshold: f64,
    pub tasks: Vec<TaskDef>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            epochs: 10,
            batch: 32,
            seed: 0,
            hidden: 256,
            newbob_factor: 0.5,
            newbob_improvement_threshold: 0.0025,
            tasks: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Head {
    w: DMatrix<f64>, // hidden x n_classes
    b: DVector<f64>,
}

/// The probe: pre-softmax layer logits, a layer mask, the shared hidden
/// layer, and one linear head per task.
#[derive(Debug, Clone, PartialEq)]
pub struct WaProbe {
    theta: Vec<f64>,
    layer_mask: Vec<bool>,
    w1: DMatrix<f64>, // in_dim x hidden
    b1: DVector<f64>,
    heads: Vec<Head>,
    tasks: Vec<TaskDef>,
}

/// One task's mini-batch: samples are `n_layers x in_dim` matrices with a
/// class label.
pub struct TaskBatch<'a> {
    pub task: usize,
    pub items: &'a [(DMatrix<f64>, usize)],
}

/// Gradients for every probe parameter, same shapes as the parameters.
#[derive(Debug, Clone)]
pub struct ProbeGradients {
    pub theta: Vec<f64>,
    pub w1: DMatrix<f64>,
    pub b1: DVector<f64>,
    pub heads: Vec<(DMatrix<f64>, DVector<f64>)>,
}

impl ProbeGradients {
    /// Gradients flattened in [`WaProbe::params_flat`] order.
    pub fn flat(&self) -> Vec<f64> {
        let mut out = self.theta.clone();
        for r in 0..self.w1.nrows() {
            for c in 0..self.w1.ncols() {
                out.push(self.w1[(r, c)]);
            }
        }
        out.extend(self.b1.iter());
        for (w, b) in &self.heads {
            for r in 0..w.nrows() {
                for c in 0..w.ncols() {
                    out.push(w[(r, c)]);
                }
            }
            out.extend(b.iter());
        }
        out
    }
}

/// Per-epoch training diary entry.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub train_loss: f64,
    pub dev_metric: f64,
    pub lr: f64,
}

fn softmax_masked(theta: &[f64], mask: &[bool]) -> Vec<f64> {
    let max = theta
        .iter()
        .zip(mask)
        .filter(|(_, &m)| m)
        .map(|(t, _)| *t)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut out = vec![0.0; theta.len()];
    let mut total = 0.0;
    for (i, (&t, &m)) in theta.iter().zip(mask).enumerate() {
        if m {
            let e = (t - max).exp();
            out[i] = e;
            total += e;
        }
    }
    for v in &mut out {
        *v /= total;
    }
    out
}

fn softmax(logits: &DVector<f64>) -> DVector<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut e = logits.map(|v| (v - max).exp());
    let total = e.sum();
    e /= total;
    e
}

fn relu(v: &DVector<f64>) -> DVector<f64> {
    v.map(|x| x.max(0.0))
}

impl WaProbe {
    /// Fresh probe with seeded uniform initialization scaled by fan-in and
    /// fan-out; layer logits start at zero (uniform layer weights).
    pub fn new(
        n_layers: usize,
        in_dim: usize,
        hidden: usize,
        tasks: Vec<TaskDef>,
        seed: u64,
    ) -> Result<Self, ProbeError> {
        if n_layers == 0 || in_dim == 0 || hidden == 0 {
            return Err(ProbeError::BadConfig(
                "n_layers, in_dim, hidden must all be >= 1".into(),
            ));
        }
        if tasks.is_empty() {
            return Err(ProbeError::BadConfig("need at least one task".into()));
        }
        for t in &tasks {
            if t.n_classes < 2 {
                return Err(ProbeError::BadConfig(format!(
                    "task {:?} needs >= 2 classes",
                    t.id
                )));
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut xavier = |rows: usize, cols: usize| -> DMatrix<f64> {
            let limit = (6.0 / (rows + cols) as f64).sqrt();
            DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-limit..limit))
        };
        let w1 = xavier(in_dim, hidden);
        let heads = tasks
            .iter()
            .map(|t| Head {
                w: xavier(hidden, t.n_classes),
                b: DVector::zeros(t.n_classes),
            })
            .collect();
        Ok(Self {
            theta: vec![0.0; n_layers],
            layer_mask: vec![true; n_layers],
            w1,
            b1: DVector::zeros(hidden),
            heads,
            tasks,
        })
    }

    pub fn n_layers(&self) -> usize {
        self.theta.len()
    }

    pub fn in_dim(&self) -> usize {
        self.w1.nrows()
    }

    pub fn hidden(&self) -> usize {
        self.w1.ncols()
    }

    pub fn tasks(&self) -> &[TaskDef] {
        &self.tasks
    }

    pub fn layer_mask(&self) -> &[bool] {
        &self.layer_mask
    }

    pub fn task_index(&self, task_id: &str) -> Result<usize, ProbeError> {
        self.tasks
            .iter()
            .position(|t| t.id == task_id)
            .ok_or_else(|| ProbeError::UnknownTask(task_id.to_string()))
    }

    /// Restricts nonzero layer weights to `mask`.
    pub fn set_layer_mask(&mut self, mask: Vec<bool>) -> Result<(), ProbeError> {
        if mask.len() != self.theta.len() {
            return Err(ProbeError::BadConfig(format!(
                "mask has {} entries for {} layers",
                mask.len(),
                self.theta.len()
            )));
        }
        if !mask.iter().any(|&m| m) {
            return Err(ProbeError::EmptyMask);
        }
        self.layer_mask = mask;
        Ok(())
    }

    /// Softmax layer weights under the mask; masked-out layers get exactly 0
    /// and the rest sum to 1.
    pub fn layer_weights(&self) -> Vec<f64> {
        softmax_masked(&self.theta, &self.layer_mask)
    }

    fn check_shape(&self, x: &DMatrix<f64>) -> Result<(), ProbeError> {
        if x.nrows() != self.n_layers() || x.ncols() != self.in_dim() {
            return Err(ProbeError::ShapeMismatch {
                rows: x.nrows(),
                cols: x.ncols(),
                layers: self.n_layers(),
                dim: self.in_dim(),
            });
        }
        Ok(())
    }

    fn forward_parts(
        &self,
        x: &DMatrix<f64>,
        task: usize,
    ) -> (Vec<f64>, DVector<f64>, DVector<f64>, DVector<f64>, DVector<f64>) {
        let weights = self.layer_weights();
        let wv = DVector::from_column_slice(&weights);
        let z = x.transpose() * &wv;
        let a1 = self.w1.transpose() * &z + &self.b1;
        let h1 = relu(&a1);
        let logits = self.heads[task].w.transpose() * &h1 + &self.heads[task].b;
        let probs = softmax(&logits);
        (weights, z, a1, h1, probs)
    }

    /// Class probabilities for one sample under one task; sums to 1.
    pub fn forward(&self, x: &DMatrix<f64>, task_id: &str) -> Result<DVector<f64>, ProbeError> {
        let task = self.task_index(task_id)?;
        self.check_shape(x)?;
        let (_, _, _, _, probs) = self.forward_parts(x, task);
        Ok(probs)
    }

    /// Mean over non-empty tasks of each task's mean cross-entropy.
    pub fn loss_multitask(&self, batches: &[TaskBatch]) -> Result<f64, ProbeError> {
        let active: Vec<&TaskBatch> = batches.iter().filter(|b| !b.items.is_empty()).collect();
        if active.is_empty() {
            return Err(ProbeError::AllBatchesEmpty);
        }
        let mut loss = 0.0;
        for batch in &active {
            let classes = self.tasks[batch.task].n_classes;
            let mut task_loss = 0.0;
            for (x, label) in batch.items {
                self.check_shape(x)?;
                if *label >= classes {
                    return Err(ProbeError::LabelOutOfRange {
                        label: *label,
                        classes,
                    });
                }
                let (_, _, _, _, probs) = self.forward_parts(x, batch.task);
                task_loss += -(probs[*label].max(PROB_CLAMP)).ln();
            }
            loss += task_loss / batch.items.len() as f64;
        }
        Ok(loss / active.len() as f64)
    }

    /// Loss and exact analytic gradients of [`Self::loss_multitask`] with
    /// respect to every parameter. Masked-out layers get zero theta
    /// gradient.
    pub fn gradient(&self, batches: &[TaskBatch]) -> Result<(f64, ProbeGradients), ProbeError> {
        let active: Vec<&TaskBatch> = batches.iter().filter(|b| !b.items.is_empty()).collect();
        if active.is_empty() {
            return Err(ProbeError::AllBatchesEmpty);
        }
        let mut grads = ProbeGradients {
            theta: vec![0.0; self.n_layers()],
            w1: DMatrix::zeros(self.in_dim(), self.hidden()),
            b1: DVector::zeros(self.hidden()),
            heads: self
                .heads
                .iter()
                .map(|h| (DMatrix::zeros(h.w.nrows(), h.w.ncols()), DVector::zeros(h.b.len())))
                .collect(),
        };
        let mut loss = 0.0;
        let task_scale = 1.0 / active.len() as f64;
        for batch in &active {
            let classes = self.tasks[batch.task].n_classes;
            let item_scale = task_scale / batch.items.len() as f64;
            for (x, label) in batch.items {
                self.check_shape(x)?;
                if *label >= classes {
                    return Err(ProbeError::LabelOutOfRange {
                        label: *label,
                        classes,
                    });
                }
                let (weights, z, a1, h1, probs) = self.forward_parts(x, batch.task);
                loss += -(probs[*label].max(PROB_CLAMP)).ln() * item_scale;

                let mut dlogits = probs;
                dlogits[*label] -= 1.0;
                dlogits *= item_scale;

                let head = &self.heads[batch.task];
                grads.heads[batch.task].0 += &h1 * dlogits.transpose();
                grads.heads[batch.task].1 += &dlogits;

                let dh1 = &head.w * &dlogits;
                let da1 = DVector::from_fn(dh1.len(), |i, _| {
                    if a1[i] > 0.0 {
                        dh1[i]
                    } else {
                        0.0
                    }
                });
                grads.w1 += &z * da1.transpose();
                grads.b1 += &da1;

                let dz = &self.w1 * &da1;
                let dw = x * &dz; // d loss / d layer-weight, per layer
                let inner: f64 = weights
                    .iter()
                    .zip(dw.iter())
                    .map(|(w, d)| w * d)
                    .sum();
                for l in 0..self.n_layers() {
                    if self.layer_mask[l] {
                        grads.theta[l] += weights[l] * (dw[l] - inner);
                    }
                }
            }
        }
        Ok((loss, grads))
    }

    /// All parameters as one flat vector: theta, then `w1` row-major, `b1`,
    /// then each head's weights row-major and bias. The order matches
    /// [`ProbeGradients::flat`].
    pub fn params_flat(&self) -> Vec<f64> {
        let mut out = self.theta.clone();
        for r in 0..self.w1.nrows() {
            for c in 0..self.w1.ncols() {
                out.push(self.w1[(r, c)]);
            }
        }
        out.extend(self.b1.iter());
        for head in &self.heads {
            for r in 0..head.w.nrows() {
                for c in 0..head.w.ncols() {
                    out.push(head.w[(r, c)]);
                }
            }
            out.extend(head.b.iter());
        }
        out
    }

    /// Writes back a flat parameter vector in [`Self::params_flat`] order.
    pub fn set_params_flat(&mut self, params: &[f64]) -> Result<(), ProbeError> {
        let expected = self.params_flat().len();
        if params.len() != expected {
            return Err(ProbeError::BadConfig(format!(
                "expected {expected} parameters, got {}",
                params.len()
            )));
        }
        let mut at = 0;
        for t in &mut self.theta {
            *t = params[at];
            at += 1;
        }
        for r in 0..self.w1.nrows() {
            for c in 0..self.w1.ncols() {
                self.w1[(r, c)] = params[at];
                at += 1;
            }
        }
        for v in self.b1.iter_mut() {
            *v = params[at];
            at += 1;
        }
        for head in &mut self.heads {
            for r in 0..head.w.nrows() {
                for c in 0..head.w.ncols() {
                    head.w[(r, c)] = params[at];
                    at += 1;
                }
            }
            for v in head.b.iter_mut() {
                *v = params[at];
                at += 1;
            }
        }
        Ok(())
    }

    fn apply_update(&mut self, grads: &ProbeGradients, lr: f64) {
        for (t, g) in self.theta.iter_mut().zip(&grads.theta) {
            *t -= lr * g;
        }
        self.w1 -= &grads.w1 * lr;
        self.b1 -= &grads.b1 * lr;
        for (head, (gw, gb)) in self.heads.iter_mut().zip(&grads.heads) {
            head.w -= gw * lr;
            head.b -= gb * lr;
        }
    }
}

/// Softmax layer weights of a trained probe (masked layers are exactly 0).
pub fn extract_layer_weights(probe: &WaProbe) -> Vec<f64> {
    probe.layer_weights()
}

/// Indices of the `k` largest weights, ties to the lower index, returned in
/// ascending order.
pub fn select_best_k_layers(weights: &[f64], k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        weights[b]
            .partial_cmp(&weights[a])
            .unwrap()
            .then(a.cmp(&b))
    });
    let mut top: Vec<usize> = order.into_iter().take(k).collect();
    top.sort_unstable();
    top
}

/// Boolean mask over `n_layers` with `indices` set.
pub fn mask_from_indices(n_layers: usize, indices: &[usize]) -> Vec<bool> {
    let mut mask = vec![false; n_layers];
    for &i in indices {
        if i < n_layers {
            mask[i] = true;
        }
    }
    mask
}

/// Per-task datasets, index-aligned with `TrainConfig::tasks`.
#[derive(Debug, Clone, Default)]
pub struct MultiTaskData {
    pub per_task: Vec<Vec<(DMatrix<f64>, usize)>>,
}

impl MultiTaskData {
    pub fn single_task(items: Vec<(DMatrix<f64>, usize)>) -> Self {
        Self {
            per_task: vec![items],
        }
    }
}

/// Accuracy and macro F1 (unweighted mean of per-class F1 over the task's
/// full class set; a class absent from both reference and hypothesis
/// contributes F1 = 0 and is still counted).
pub fn evaluate(
    probe: &WaProbe,
    test: &[(DMatrix<f64>, usize)],
    task_id: &str,
) -> Result<(f64, f64), ProbeError> {
    if test.is_empty() {
        return Err(ProbeError::EmptyTestSet);
    }
    let task = probe.task_index(task_id)?;
    let classes = probe.tasks[task].n_classes;
    let mut tp = vec![0usize; classes];
    let mut fp = vec![0usize; classes];
    let mut fn_ = vec![0usize; classes];
    let mut correct = 0usize;
    for (x, label) in test {
        if *label >= classes {
            return Err(ProbeError::LabelOutOfRange {
                label: *label,
                classes,
            });
        }
        let probs = probe.forward(x, task_id)?;
        let mut pred = 0;
        for c in 1..classes {
            if probs[c] > probs[pred] {
                pred = c;
            }
        }
        if pred == *label {
            correct += 1;
            tp[pred] += 1;
        } else {
            fp[pred] += 1;
            fn_[*label] += 1;
        }
    }
    let accuracy = correct as f64 / test.len() as f64;
    let mut f1_sum = 0.0;
    for c in 0..classes {
        let p_den = tp[c] + fp[c];
        let r_den = tp[c] + fn_[c];
        let precision = if p_den > 0 { tp[c] as f64 / p_den as f64 } else { 0.0 };
        let recall = if r_den > 0 { tp[c] as f64 / r_den as f64 } else { 0.0 };
        if precision + recall > 0.0 {
            f1_sum += 2.0 * precision * recall / (precision + recall);
        }
    }
    Ok((accuracy, f1_sum / classes as f64))
}

fn dev_metric(probe: &WaProbe, dev: &MultiTaskData) -> Result<f64, ProbeError> {
    let mut total = 0.0;
    let mut counted = 0usize;
    for (task, items) in dev.per_task.iter().enumerate() {
        if items.is_empty() {
            continue;
        }
        let (_, f1) = evaluate(probe, items, &probe.tasks[task].id.clone())?;
        total += f1;
        counted += 1;
    }
    if counted == 0 {
        return Err(ProbeError::AllBatchesEmpty);
    }
    Ok(total / counted as f64)
}

/// Trains a probe with mini-batch gradient descent and new-bob annealing:
/// when the relative development improvement after an epoch falls below the
/// threshold, the learning rate is multiplied by the factor. Returns the
/// parameters from the best development epoch and the per-epoch diary.
/// Fully deterministic under `cfg.seed`.
pub fn train_probe(
    train: &MultiTaskData,
    dev: &MultiTaskData,
    layer_mask: Option<Vec<bool>>,
    n_layers: usize,
    in_dim: usize,
    cfg: &TrainConfig,
) -> Result<(WaProbe, Vec<EpochMetrics>), ProbeError> {
    if cfg.lr <= 0.0 {
        return Err(ProbeError::BadConfig("lr must be > 0".into()));
    }
    if cfg.epochs == 0 {
        return Err(ProbeError::BadConfig("epochs must be >= 1".into()));
    }
    if cfg.batch == 0 {
        return Err(ProbeError::BadConfig("batch must be >= 1".into()));
    }
    if train.per_task.len() != cfg.tasks.len() || dev.per_task.len() != cfg.tasks.len() {
        return Err(ProbeError::BadConfig(
            "train/dev task count must match cfg.tasks".into(),
        ));
    }
    let mut probe = WaProbe::new(n_layers, in_dim, cfg.hidden, cfg.tasks.clone(), cfg.seed)?;
    if let Some(mask) = layer_mask {
        probe.set_layer_mask(mask)?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(1));

    let mut lr = cfg.lr;
    let mut best: Option<(f64, WaProbe)> = None;
    let mut prev_metric: Option<f64> = None;
    let mut diary = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        let mut orders: Vec<Vec<usize>> = Vec::with_capacity(train.per_task.len());
        for items in &train.per_task {
            let mut idx: Vec<usize> = (0..items.len()).collect();
            idx.shuffle(&mut rng);
            orders.push(idx);
        }
        let steps = train
            .per_task
            .iter()
            .map(|items| items.len().div_ceil(cfg.batch))
            .max()
            .unwrap_or(0);

        let mut epoch_loss = 0.0;
        let mut n_steps = 0usize;
        for step in 0..steps {
            let mut staged: Vec<(usize, Vec<(DMatrix<f64>, usize)>)> = Vec::new();
            for (task, items) in train.per_task.iter().enumerate() {
                let lo = step * cfg.batch;
                if lo >= items.len() {
                    continue;
                }
                let hi = (lo + cfg.batch).min(items.len());
                let chunk: Vec<(DMatrix<f64>, usize)> = orders[task][lo..hi]
                    .iter()
                    .map(|&i| items[i].clone())
                    .collect();
                staged.push((task, chunk));
            }
            if staged.is_empty() {
                continue;
            }
            let batches: Vec<TaskBatch> = staged
                .iter()
                .map(|(task, chunk)| TaskBatch {
                    task: *task,
                    items: chunk,
                })
                .collect();
            let (loss, grads) = probe.gradient(&batches)?;
            if !loss.is_finite() {
                return Err(ProbeError::Diverged { epoch });
            }
            probe.apply_update(&grads, lr);
            epoch_loss += loss;
            n_steps += 1;
        }
        let train_loss = if n_steps > 0 {
            epoch_loss / n_steps as f64
        } else {
            f64::NAN
        };
        if !train_loss.is_finite() {
            return Err(ProbeError::Diverged { epoch });
        }

        let metric = dev_metric(&probe, dev)?;
        diary.push(EpochMetrics {
            epoch,
            train_loss,
            dev_metric: metric,
            lr,
        });
        // Ties go to the later epoch, so the returned parameters reflect the
        // longest training run that still attains the best dev metric.
        if best.as_ref().is_none_or(|(m, _)| metric >= *m) {
            best = Some((metric, probe.clone()));
        }
        if let Some(prev) = prev_metric {
            let improvement = if prev > 0.0 {
                (metric - prev) / prev
            } else {
                metric - prev
            };
            if improvement < cfg.newbob_improvement_threshold {
                lr *= cfg.newbob_factor;
            }
        }
        prev_metric = Some(metric);
    }

    let (_, best_probe) = best.expect("at least one epoch ran");
    Ok((best_probe, diary))
}

fn write_matrix(w: &mut impl Write, m: &DMatrix<f64>) -> std::io::Result<()> {
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            w.write_all(&m[(r, c)].to_le_bytes())?;
        }
    }
    Ok(())
}

fn read_f64s(r: &mut impl Read, n: usize) -> Result<Vec<f64>, ProbeError> {
    let mut buf = vec![0u8; n * 8];
    r.read_exact(&mut buf)
        .map_err(|_| ProbeError::Corrupt("truncated parameter block".into()))?;
    Ok(buf
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect())
}

fn read_u32(r: &mut impl Read) -> Result<u32, ProbeError> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)
        .map_err(|_| ProbeError::Corrupt("truncated header".into()))?;
    Ok(u32::from_le_bytes(b))
}

/// Saves a probe in the versioned `LPRB` binary layout.
pub fn save_probe(path: impl AsRef<Path>, probe: &WaProbe) -> Result<(), ProbeError> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&LPRB_MAGIC)?;
    w.write_all(&LPRB_VERSION.to_le_bytes())?;
    w.write_all(&(probe.n_layers() as u32).to_le_bytes())?;
    w.write_all(&(probe.in_dim() as u32).to_le_bytes())?;
    w.write_all(&(probe.hidden() as u32).to_le_bytes())?;
    w.write_all(&(probe.tasks.len() as u32).to_le_bytes())?;
    for task in &probe.tasks {
        let id = task.id.as_bytes();
        w.write_all(&(id.len() as u32).to_le_bytes())?;
        w.write_all(id)?;
        w.write_all(&(task.n_classes as u32).to_le_bytes())?;
    }
    for &m in &probe.layer_mask {
        w.write_all(&[u8::from(m)])?;
    }
    for t in &probe.theta {
        w.write_all(&t.to_le_bytes())?;
    }
    write_matrix(&mut w, &probe.w1)?;
    for v in probe.b1.iter() {
        w.write_all(&v.to_le_bytes())?;
    }
    for head in &probe.heads {
        write_matrix(&mut w, &head.w)?;
        for v in head.b.iter() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Loads a probe written by [`save_probe`].
pub fn load_probe(path: impl AsRef<Path>) -> Result<WaProbe, ProbeError> {
    let mut r = File::open(path)?;
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)
        .map_err(|_| ProbeError::Corrupt("truncated header".into()))?;
    if magic != LPRB_MAGIC {
        return Err(ProbeError::BadMagic(magic));
    }
    let version = read_u32(&mut r)?;
    if version != LPRB_VERSION {
        return Err(ProbeError::BadVersion(version));
    }
    let n_layers = read_u32(&mut r)? as usize;
    let in_dim = read_u32(&mut r)? as usize;
    let hidden = read_u32(&mut r)? as usize;
    let n_tasks = read_u32(&mut r)? as usize;
    let mut tasks = Vec::with_capacity(n_tasks);
    for _ in 0..n_tasks {
        let id_len = read_u32(&mut r)? as usize;
        let mut id = vec![0u8; id_len];
        r.read_exact(&mut id)
            .map_err(|_| ProbeError::Corrupt("truncated task id".into()))?;
        let id = String::from_utf8(id).map_err(|_| ProbeError::Corrupt("task id not utf-8".into()))?;
        let n_classes = read_u32(&mut r)? as usize;
        tasks.push(TaskDef { id, n_classes });
    }
    let mut mask_bytes = vec![0u8; n_layers];
    r.read_exact(&mut mask_bytes)
        .map_err(|_| ProbeError::Corrupt("truncated layer mask".into()))?;
    let layer_mask: Vec<bool> = mask_bytes.into_iter().map(|b| b != 0).collect();
    let theta = read_f64s(&mut r, n_layers)?;
    let w1_vals = read_f64s(&mut r, in_dim * hidden)?;
    let w1 = DMatrix::from_fn(in_dim, hidden, |i, j| w1_vals[i * hidden + j]);
    let b1 = DVector::from_vec(read_f64s(&mut r, hidden)?);
    let mut heads = Vec::with_capacity(n_tasks);
    for task in &tasks {
        let vals = read_f64s(&mut r, hidden * task.n_classes)?;
        let w = DMatrix::from_fn(hidden, task.n_classes, |i, j| vals[i * task.n_classes + j]);
        let b = DVector::from_vec(read_f64s(&mut r, task.n_classes)?);
        heads.push(Head { w, b });
    }
    Ok(WaProbe {
        theta,
        layer_mask,
        w1,
        b1,
        heads,
        tasks,
    })
}
