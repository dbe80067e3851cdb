//! Formant estimation: pre-emphasis, autocorrelation LPC via
//! Levinson-Durbin, and pole extraction through companion-matrix roots.

use nalgebra::DMatrix;

use super::{DspConfig, Formant};

/// First-order pre-emphasis `y[t] = x[t] - c * x[t-1]`.
pub fn pre_emphasis(frame: &[f32], coeff: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(frame.len());
    let mut prev = 0.0f64;
    for &s in frame {
        let x = s as f64;
        out.push(x - coeff * prev);
        prev = x;
    }
    out
}

fn autocorrelation(x: &[f64], order: usize) -> Vec<f64> {
    let n = x.len();
    (0..=order)
        .map(|lag| {
            let mut acc = 0.0;
            for t in 0..n.saturating_sub(lag) {
                acc += x[t] * x[t + lag];
            }
            acc
        })
        .collect()
}

/// Levinson-Durbin recursion. Returns the LPC coefficients `a1..=ap` of
/// `A(z) = 1 + a1 z^-1 + ... + ap z^-p`, or `None` when the autocorrelation
/// is not positive definite (silent or degenerate frames).
pub fn levinson_durbin(r: &[f64], order: usize) -> Option<Vec<f64>> {
    if r.len() < order + 1 || r[0] <= 0.0 {
        return None;
    }
    let mut a = vec![0.0f64; order + 1];
    a[0] = 1.0;
    let mut err = r[0];
    for i in 1..=order {
        let mut acc = r[i];
        for j in 1..i {
            acc += a[j] * r[i - j];
        }
        let k = -acc / err;
        let mut updated = a.clone();
        for j in 1..i {
            updated[j] = a[j] + k * a[i - j];
        }
        updated[i] = k;
        a = updated;
        err *= 1.0 - k * k;
        if err <= 0.0 || !err.is_finite() {
            return None;
        }
    }
    Some(a[1..].to_vec())
}

/// Roots of `z^p + a1 z^(p-1) + ... + ap` via companion-matrix eigenvalues.
fn polynomial_roots(lpc: &[f64]) -> Vec<nalgebra::Complex<f64>> {
    let p = lpc.len();
    if p == 0 {
        return Vec::new();
    }
    let mut companion = DMatrix::<f64>::zeros(p, p);
    for (j, &c) in lpc.iter().enumerate() {
        companion[(0, j)] = -c;
    }
    for i in 1..p {
        companion[(i, i - 1)] = 1.0;
    }
    companion.complex_eigenvalues().iter().copied().collect()
}

/// LPC formant candidates of a short frame: up to three, ascending in
/// frequency, restricted to 90-5500 Hz with bandwidth under 600 Hz. `None`
/// when the LPC recursion is unstable (silent or degenerate input).
pub fn estimate_formants(
    frame: &[f32],
    sample_rate_hz: u32,
    cfg: &DspConfig,
) -> Option<[Option<Formant>; 3]> {
    let fs = sample_rate_hz as f64;
    let emphasized = pre_emphasis(frame, cfg.preemphasis);
    let n = emphasized.len();
    if n <= cfg.lpc_order {
        return None;
    }
    let windowed: Vec<f64> = emphasized
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            v * (0.54 - 0.46 * (std::f64::consts::TAU * i as f64 / (n - 1) as f64).cos())
        })
        .collect();
    let r = autocorrelation(&windowed, cfg.lpc_order);
    if r[0] <= 1e-12 {
        return None;
    }
    let lpc = levinson_durbin(&r, cfg.lpc_order)?;

    let mut candidates: Vec<Formant> = polynomial_roots(&lpc)
        .into_iter()
        .filter(|root| root.im > 0.0)
        .filter_map(|root| {
            let modulus = root.norm();
            if modulus >= 1.0 || modulus <= 0.0 {
                return None;
            }
            let freq_hz = root.im.atan2(root.re) / std::f64::consts::TAU * fs;
            let bw_hz = -(fs / std::f64::consts::PI) * modulus.ln();
            (freq_hz >= 90.0 && freq_hz <= 5500.0 && bw_hz > 0.0 && bw_hz < 600.0)
                .then_some(Formant { freq_hz, bw_hz })
        })
        .collect();
    candidates.sort_by(|a, b| a.freq_hz.partial_cmp(&b.freq_hz).unwrap());

    let mut out = [None; 3];
    for (slot, cand) in out.iter_mut().zip(candidates) {
        *slot = Some(cand);
    }
    Some(out)
}
