//! Regularized canonical correlation analysis and projection-weighted CCA
//! scoring under a fixed-fold cross-validation scheme.
//!
//! Fitting centers both views, adds a ridge proportional to the mean
//! covariance diagonal (which also absorbs the rank deficiency of centered
//! one-hot label matrices), whitens each view through a symmetric inverse
//! square root, and reads canonical directions and correlations off the SVD
//! of the whitened cross-covariance.
//!
//! Scoring weights per-component correlations by how much of the first view
//! each canonical direction accounts for: callers should always pass the
//! representation view as `X` and the target view (labels, acoustic
//! features) as `Y`.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CcaError {
    #[error("need at least 2 rows, got {0}")]
    TooFewRows(usize),
    #[error("row counts differ: x has {x}, y has {y}")]
    RowCountMismatch { x: usize, y: usize },
    #[error("column counts do not match the fitted model")]
    ColumnMismatch,
    #[error("degenerate covariance after regularization")]
    DegenerateCovariance,
    #[error("zero total projection weight (all-zero representation view)")]
    ZeroWeight,
    #[error("test fold {fold} has {rows} rows; need at least 2")]
    FoldTooSmall { fold: usize, rows: usize },
    #[error("invalid config: {0}")]
    BadConfig(String),
    #[error("layer {layer} has {rows} rows, target has {expected}")]
    LayerRowMismatch {
        layer: usize,
        rows: usize,
        expected: usize,
    },
}

/// Which view's projections supply the PWCCA weights during cross-validated
/// scoring. The default weighs by the held-out projections of the
/// representation view; `Train` weighs by the training-fold projections.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightSource {
    #[default]
    Eval,
    Train,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CcaConfig {
    /// Ridge added to each view's covariance, relative to its mean diagonal.
    pub reg_epsilon: f64,
    /// Cap on the number of canonical components (`None` keeps all).
    pub max_components: Option<usize>,
    pub n_folds: usize,
    pub n_test_folds: usize,
    pub seed: u64,
    pub weights_from: WeightSource,
}

impl Default for CcaConfig {
    fn default() -> Self {
        Self {
            reg_epsilon: 1e-6,
            max_components: None,
            n_folds: 10,
            n_test_folds: 3,
            seed: 0,
            weights_from: WeightSource::Eval,
        }
    }
}

impl CcaConfig {
    fn validate(&self) -> Result<(), CcaError> {
        if !(self.reg_epsilon > 0.0) {
            return Err(CcaError::BadConfig("reg_epsilon must be > 0".into()));
        }
        if self.n_folds < 2 {
            return Err(CcaError::BadConfig("n_folds must be >= 2".into()));
        }
        if self.n_test_folds == 0 || self.n_test_folds >= self.n_folds {
            return Err(CcaError::BadConfig(
                "need 1 <= n_test_folds < n_folds".into(),
            ));
        }
        Ok(())
    }
}

/// A fitted CCA: view means, projection bases, and the training canonical
/// correlations (non-increasing, clipped to `[0, 1]`).
#[derive(Debug, Clone)]
pub struct CcaModel {
    pub mean_x: DVector<f64>,
    pub mean_y: DVector<f64>,
    pub proj_x: DMatrix<f64>,
    pub proj_y: DMatrix<f64>,
    pub train_correlations: Vec<f64>,
}

impl CcaModel {
    pub fn n_components(&self) -> usize {
        self.proj_x.ncols()
    }
}

fn column_means(m: &DMatrix<f64>) -> DVector<f64> {
    let n = m.nrows() as f64;
    DVector::from_iterator(m.ncols(), m.column_iter().map(|c| c.sum() / n))
}

fn centered(m: &DMatrix<f64>, means: &DVector<f64>) -> DMatrix<f64> {
    let mut out = m.clone();
    for (j, mean) in means.iter().enumerate() {
        for v in out.column_mut(j).iter_mut() {
            *v -= mean;
        }
    }
    out
}

/// Symmetric inverse square root via eigendecomposition with an eigenvalue
/// floor; the floor matches the absolute ridge so whitening never divides by
/// anything smaller than the regularization scale.
fn inverse_sqrt_sym(m: DMatrix<f64>, floor: f64) -> Result<DMatrix<f64>, CcaError> {
    let eig = m.symmetric_eigen();
    let mut scaled = eig.eigenvectors.clone();
    for (j, &lambda) in eig.eigenvalues.iter().enumerate() {
        let lam = lambda.max(floor);
        if !(lam > 0.0) || !lam.is_finite() {
            return Err(CcaError::DegenerateCovariance);
        }
        let s = 1.0 / lam.sqrt();
        for v in scaled.column_mut(j).iter_mut() {
            *v *= s;
        }
    }
    Ok(&scaled * eig.eigenvectors.transpose())
}

fn ridge_for(cov: &DMatrix<f64>, reg_epsilon: f64) -> f64 {
    let mean_diag = cov.diagonal().sum() / cov.nrows() as f64;
    if mean_diag > 0.0 {
        reg_epsilon * mean_diag
    } else {
        reg_epsilon
    }
}

/// Fits CCA between paired views `x` (n x d1) and `y` (n x d2).
pub fn fit_cca(x: &DMatrix<f64>, y: &DMatrix<f64>, cfg: &CcaConfig) -> Result<CcaModel, CcaError> {
    cfg.validate()?;
    let n = x.nrows();
    if n != y.nrows() {
        return Err(CcaError::RowCountMismatch {
            x: n,
            y: y.nrows(),
        });
    }
    if n < 2 {
        return Err(CcaError::TooFewRows(n));
    }

    let mean_x = column_means(x);
    let mean_y = column_means(y);
    let xc = centered(x, &mean_x);
    let yc = centered(y, &mean_y);

    let denom = (n - 1) as f64;
    let mut sxx = xc.transpose() * &xc / denom;
    let mut syy = yc.transpose() * &yc / denom;
    let sxy = xc.transpose() * &yc / denom;

    let ridge_x = ridge_for(&sxx, cfg.reg_epsilon);
    let ridge_y = ridge_for(&syy, cfg.reg_epsilon);
    for i in 0..sxx.nrows() {
        sxx[(i, i)] += ridge_x;
    }
    for i in 0..syy.nrows() {
        syy[(i, i)] += ridge_y;
    }

    let wx = inverse_sqrt_sym(sxx, ridge_x)?;
    let wy = inverse_sqrt_sym(syy, ridge_y)?;

    let t = &wx * sxy * &wy;
    let svd = t.svd(true, true);
    let u = svd.u.ok_or(CcaError::DegenerateCovariance)?;
    let v_t = svd.v_t.ok_or(CcaError::DegenerateCovariance)?;

    let full = svd.singular_values.len();
    let k = cfg.max_components.map_or(full, |m| m.min(full));
    let proj_x = &wx * u.columns(0, k);
    let proj_y = &wy * v_t.rows(0, k).transpose();
    let train_correlations: Vec<f64> = svd
        .singular_values
        .iter()
        .take(k)
        .map(|s| s.clamp(0.0, 1.0))
        .collect();

    if proj_x.iter().any(|v| !v.is_finite()) || proj_y.iter().any(|v| !v.is_finite()) {
        return Err(CcaError::DegenerateCovariance);
    }
    Ok(CcaModel {
        mean_x,
        mean_y,
        proj_x,
        proj_y,
        train_correlations,
    })
}

fn pearson(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    let n = a.len() as f64;
    let ma = a.sum() / n;
    let mb = b.sum() / n;
    let mut cov = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for (x, y) in a.iter().zip(b.iter()) {
        let dx = x - ma;
        let dy = y - mb;
        cov += dx * dy;
        va += dx * dx;
        vb += dy * dy;
    }
    if va <= 0.0 || vb <= 0.0 {
        return 0.0;
    }
    cov / (va * vb).sqrt()
}

/// Per-component weights: `alpha_i = sum_j |<h_i, c_j>|` where `h_i` is the
/// unit-normalized i-th canonical projection of the weight view and `c_j`
/// ranges over the columns of that centered view.
fn projection_weights(proj: &DMatrix<f64>, xc: &DMatrix<f64>) -> Vec<f64> {
    let k = proj.ncols();
    let mut alphas = Vec::with_capacity(k);
    for i in 0..k {
        let h = xc * proj.column(i);
        let norm = h.norm();
        if norm <= 0.0 {
            alphas.push(0.0);
            continue;
        }
        let mut alpha = 0.0;
        for j in 0..xc.ncols() {
            alpha += (h.dot(&xc.column(j).into_owned()) / norm).abs();
        }
        alphas.push(alpha);
    }
    alphas
}

fn pwcca_inner(
    model: &CcaModel,
    x: &DMatrix<f64>,
    y: &DMatrix<f64>,
    weight_x: Option<&DMatrix<f64>>,
) -> Result<f64, CcaError> {
    if x.ncols() != model.mean_x.len() || y.ncols() != model.mean_y.len() {
        return Err(CcaError::ColumnMismatch);
    }
    if x.nrows() != y.nrows() {
        return Err(CcaError::RowCountMismatch {
            x: x.nrows(),
            y: y.nrows(),
        });
    }
    if x.nrows() < 2 {
        return Err(CcaError::TooFewRows(x.nrows()));
    }
    let xc = centered(x, &model.mean_x);
    let yc = centered(y, &model.mean_y);
    let u = &xc * &model.proj_x;
    let v = &yc * &model.proj_y;

    let k = model.n_components();
    let mut rho = Vec::with_capacity(k);
    for i in 0..k {
        let r = pearson(&u.column(i).into_owned(), &v.column(i).into_owned());
        rho.push(r.clamp(0.0, 1.0));
    }

    let weight_view = match weight_x {
        Some(train_x) => centered(train_x, &model.mean_x),
        None => xc,
    };
    let alphas = projection_weights(&model.proj_x, &weight_view);
    let total: f64 = alphas.iter().sum();
    if !(total > 0.0) {
        return Err(CcaError::ZeroWeight);
    }
    Ok(alphas
        .iter()
        .zip(rho.iter())
        .map(|(a, r)| (a / total) * r)
        .sum())
}

/// Projection-weighted CCA score of `(x, y)` under a fitted model, in
/// `[0, 1]`. Views are centered with the model's means; weights come from
/// the canonical projections of the given `x`.
pub fn pwcca_score(model: &CcaModel, x: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<f64, CcaError> {
    pwcca_inner(model, x, y, None)
}

/// Like [`pwcca_score`] but with the weights computed from a different
/// realization of the representation view (e.g. the training fold).
pub fn pwcca_score_weighted_by(
    model: &CcaModel,
    x: &DMatrix<f64>,
    y: &DMatrix<f64>,
    weight_x: &DMatrix<f64>,
) -> Result<f64, CcaError> {
    pwcca_inner(model, x, y, Some(weight_x))
}

/// Deterministic fold assignment: a seeded shuffle of `0..n` cut into
/// `n_folds` near-equal contiguous chunks (the first `n % n_folds` folds get
/// one extra row).
pub fn fold_indices(n: usize, n_folds: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut perm: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    perm.shuffle(&mut rng);
    let base = n / n_folds;
    let rem = n % n_folds;
    let mut folds = Vec::with_capacity(n_folds);
    let mut at = 0;
    for f in 0..n_folds {
        let size = base + usize::from(f < rem);
        folds.push(perm[at..at + size].to_vec());
        at += size;
    }
    folds
}

fn gather_rows(m: &DMatrix<f64>, rows: &[usize]) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(rows.len(), m.ncols());
    for (r, &src) in rows.iter().enumerate() {
        out.set_row(r, &m.row(src));
    }
    out
}

/// Per-test-fold PWCCA scores: fit on the complement of each of the first
/// `n_test_folds` folds and score on the held-out fold.
pub fn cross_validated_cca_scores(
    x: &DMatrix<f64>,
    y: &DMatrix<f64>,
    cfg: &CcaConfig,
) -> Result<Vec<f64>, CcaError> {
    cfg.validate()?;
    let n = x.nrows();
    if n != y.nrows() {
        return Err(CcaError::RowCountMismatch {
            x: n,
            y: y.nrows(),
        });
    }
    if n < cfg.n_folds {
        return Err(CcaError::TooFewRows(n));
    }
    let folds = fold_indices(n, cfg.n_folds, cfg.seed);
    let mut scores = Vec::with_capacity(cfg.n_test_folds);
    for f in 0..cfg.n_test_folds {
        let test = &folds[f];
        if test.len() < 2 {
            return Err(CcaError::FoldTooSmall {
                fold: f,
                rows: test.len(),
            });
        }
        let train: Vec<usize> = folds
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != f)
            .flat_map(|(_, idx)| idx.iter().copied())
            .collect();
        let x_train = gather_rows(x, &train);
        let y_train = gather_rows(y, &train);
        let x_test = gather_rows(x, test);
        let y_test = gather_rows(y, test);
        let model = fit_cca(&x_train, &y_train, cfg)?;
        let score = match cfg.weights_from {
            WeightSource::Eval => pwcca_score(&model, &x_test, &y_test)?,
            WeightSource::Train => {
                pwcca_score_weighted_by(&model, &x_test, &y_test, &x_train)?
            }
        };
        scores.push(score);
    }
    Ok(scores)
}

/// Mean held-out PWCCA over the first `n_test_folds` folds.
pub fn cross_validated_cca(
    x: &DMatrix<f64>,
    y: &DMatrix<f64>,
    cfg: &CcaConfig,
) -> Result<f64, CcaError> {
    let scores = cross_validated_cca_scores(x, y, cfg)?;
    Ok(scores.iter().sum::<f64>() / scores.len() as f64)
}

/// One cross-validated score per layer, with identical folds across layers.
/// Layers are evaluated in parallel and gathered in layer order, so the
/// output does not depend on scheduling.
pub fn layerwise_cca_sweep(
    per_layer_x: &[DMatrix<f64>],
    y: &DMatrix<f64>,
    cfg: &CcaConfig,
) -> Result<Vec<(usize, f64)>, CcaError> {
    for (layer, x) in per_layer_x.iter().enumerate() {
        if x.nrows() != y.nrows() {
            return Err(CcaError::LayerRowMismatch {
                layer,
                rows: x.nrows(),
                expected: y.nrows(),
            });
        }
    }
    per_layer_x
        .par_iter()
        .enumerate()
        .map(|(layer, x)| cross_validated_cca(x, y, cfg).map(|s| (layer, s)))
        .collect()
}
