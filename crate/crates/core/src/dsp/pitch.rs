//! Fundamental frequency, harmonics-to-noise ratio, and cycle-to-cycle
//! perturbation measures (jitter, shimmer).

use super::DspConfig;

/// Outcome of pitch analysis on one frame. `lag` is the interpolated
/// autocorrelation lag in samples (0 when unvoiced).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PitchEstimate {
    pub f0_hz: f64,
    pub voiced: bool,
    pub r_max: f64,
    pub lag: f64,
}

impl PitchEstimate {
    fn unvoiced() -> Self {
        Self {
            f0_hz: 0.0,
            voiced: false,
            r_max: 0.0,
            lag: 0.0,
        }
    }
}

/// Mean-removed, length-unbiased normalized autocorrelation at integer lags
/// `0..=max_lag`. The unbiased normalization keeps the value near 1 at the
/// period of a stationary tone even for lags deep into the window.
fn normalized_autocorr(frame: &[f32], max_lag: usize) -> Vec<f64> {
    let n = frame.len();
    let mut r = vec![0.0; max_lag + 1];
    if n == 0 {
        return r;
    }
    let mean = frame.iter().map(|&v| v as f64).sum::<f64>() / n as f64;
    let x: Vec<f64> = frame.iter().map(|&v| v as f64 - mean).collect();
    let energy: f64 = x.iter().map(|v| v * v).sum();
    if energy <= 0.0 {
        return r; // silence: r defined as 0 everywhere
    }
    let mean_square = energy / n as f64;
    r[0] = 1.0;
    for (lag, slot) in r.iter_mut().enumerate().skip(1) {
        if lag >= n {
            break;
        }
        let mut acc = 0.0;
        for t in 0..n - lag {
            acc += x[t] * x[t + lag];
        }
        *slot = acc / (n - lag) as f64 / mean_square;
    }
    r
}

/// Parabolic refinement of a peak at integer position `i` of `values`:
/// returns (position, value) with a sub-sample offset clamped to half a step.
fn parabolic_peak(values: &[f64], i: usize) -> (f64, f64) {
    if i == 0 || i + 1 >= values.len() {
        return (i as f64, values[i]);
    }
    let (l, c, r) = (values[i - 1], values[i], values[i + 1]);
    let denom = l - 2.0 * c + r;
    if denom.abs() < 1e-30 {
        return (i as f64, c);
    }
    let delta = (0.5 * (l - r) / denom).clamp(-0.5, 0.5);
    let value = c - 0.25 * (l - r) * delta;
    (i as f64 + delta, value)
}

/// Penalty per octave above the shortest candidate lag; a stationary tone
/// has near-equal autocorrelation peaks at every period multiple, and the
/// cost keeps the search off those subharmonics.
const OCTAVE_COST: f64 = 0.01;

/// Autocorrelation pitch estimate over the configured F0 search range.
/// Candidates are the local autocorrelation maxima, scored with a small
/// octave cost; voiced iff the chosen peak (after parabolic interpolation)
/// reaches the voicing threshold. Silence yields `r_max = 0` and unvoiced.
pub fn estimate_f0(frame: &[f32], sample_rate_hz: u32, cfg: &DspConfig) -> PitchEstimate {
    let fs = sample_rate_hz as f64;
    let min_lag = (fs / cfg.f0_max_hz).floor().max(2.0) as usize;
    let max_lag = ((fs / cfg.f0_min_hz).ceil() as usize).min(frame.len().saturating_sub(2));
    if max_lag <= min_lag {
        return PitchEstimate::unvoiced();
    }
    let r = normalized_autocorr(frame, max_lag + 1);
    let mut best: Option<(usize, f64)> = None;
    for lag in min_lag..=max_lag {
        if r[lag] >= r[lag - 1] && r[lag] >= r[lag + 1] {
            let score = r[lag] - OCTAVE_COST * (lag as f64 / min_lag as f64).log2();
            if best.is_none_or(|(_, s)| score > s) {
                best = Some((lag, score));
            }
        }
    }
    let best = match best {
        Some((lag, _)) => lag,
        None => {
            // No interior local maximum; fall back to the plain argmax.
            let mut b = min_lag;
            for lag in min_lag..=max_lag {
                if r[lag] > r[b] {
                    b = lag;
                }
            }
            b
        }
    };
    let (lag, r_max) = parabolic_peak(&r, best);
    if r_max < cfg.voicing_threshold || lag <= 0.0 {
        return PitchEstimate::unvoiced();
    }
    let f0_hz = fs / lag;
    if f0_hz < cfg.f0_min_hz || f0_hz > cfg.f0_max_hz {
        return PitchEstimate::unvoiced();
    }
    PitchEstimate {
        f0_hz,
        voiced: true,
        r_max,
        lag,
    }
}

/// Harmonics-to-noise ratio from a normalized autocorrelation value at the
/// pitch lag: `10 log10(r / (1 - r))`, clamped to `[-20, 60]` dB.
pub fn hnr_from_autocorr(r: f64) -> f64 {
    if r <= 0.0 {
        return -20.0;
    }
    if r >= 1.0 {
        return 60.0;
    }
    (10.0 * (r / (1.0 - r)).log10()).clamp(-20.0, 60.0)
}

/// HNR of a voiced frame given its pitch lag; re-reads the autocorrelation
/// around the lag with parabolic refinement.
pub fn compute_hnr(frame: &[f32], f0_lag: f64) -> f64 {
    let lag = f0_lag.round().max(1.0) as usize;
    let max_lag = (lag + 1).min(frame.len().saturating_sub(1));
    let r = normalized_autocorr(frame, max_lag);
    let i = lag.min(r.len().saturating_sub(1));
    let (_, r_peak) = parabolic_peak(&r, i);
    hnr_from_autocorr(r_peak)
}

/// Picks one positive peak per glottal cycle, guided by the local period
/// from the F0 track, with sub-sample position and amplitude refinement.
/// Returns (positions in samples, amplitudes).
fn pick_period_peaks(
    samples: &[f32],
    sample_rate_hz: u32,
    f0_track: &[(f64, f64)],
) -> (Vec<f64>, Vec<f64>) {
    let fs = sample_rate_hz as f64;
    let mut x: Vec<f64> = samples.iter().map(|&v| v as f64).collect();
    // Normalize polarity so the dominant extremum is a positive peak.
    let max = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = x.iter().cloned().fold(f64::INFINITY, f64::min);
    if min.abs() > max.abs() {
        for v in &mut x {
            *v = -*v;
        }
    }
    let n = x.len();
    let period_at = |pos: f64| -> f64 {
        let t = pos / fs;
        let f0 = f0_track
            .iter()
            .min_by(|a, b| {
                (a.0 - t)
                    .abs()
                    .partial_cmp(&(b.0 - t).abs())
                    .unwrap()
            })
            .map(|&(_, f)| f)
            .unwrap_or(0.0);
        if f0 > 0.0 {
            fs / f0
        } else {
            0.0
        }
    };

    let p0 = period_at(0.0);
    if p0 <= 0.0 || n == 0 {
        return (Vec::new(), Vec::new());
    }
    let first_end = ((1.5 * p0) as usize).min(n);
    if first_end == 0 {
        return (Vec::new(), Vec::new());
    }
    let mut peak_idx = 0usize;
    for i in 0..first_end {
        if x[i] > x[peak_idx] {
            peak_idx = i;
        }
    }
    if x[peak_idx] <= 0.0 {
        return (Vec::new(), Vec::new());
    }

    let mut positions = Vec::new();
    let mut amplitudes = Vec::new();
    let (pos, amp) = parabolic_peak(&x, peak_idx);
    positions.push(pos);
    amplitudes.push(amp);

    loop {
        let prev = *positions.last().unwrap();
        let period = period_at(prev);
        if period <= 0.0 {
            break;
        }
        let lo = (prev + 0.5 * period).ceil() as usize;
        let hi = ((prev + 1.5 * period).floor() as usize).min(n.saturating_sub(1));
        if lo >= n || lo > hi {
            break;
        }
        let mut best = lo;
        for i in lo..=hi {
            if x[i] > x[best] {
                best = i;
            }
        }
        // A cycle peak must rise above zero; anything else is the region
        // tail or a gap, not another period.
        if x[best] <= 0.0 {
            break;
        }
        let (pos, amp) = parabolic_peak(&x, best);
        positions.push(pos);
        amplitudes.push(amp);
    }
    (positions, amplitudes)
}

/// Jitter and shimmer in percent over a voiced region, guided by an F0 track
/// of `(t_s relative to region start, f0_hz)` points. Needs at least four
/// consecutive periods; returns `None` otherwise.
///
/// jitter = mean |T_i - T_{i-1}| / mean T * 100;
/// shimmer = mean |A_i - A_{i+1}| / mean A * 100 over period peak amplitudes.
pub fn compute_jitter_shimmer(
    samples: &[f32],
    sample_rate_hz: u32,
    f0_track: &[(f64, f64)],
) -> Option<(f64, f64)> {
    let (positions, amplitudes) = pick_period_peaks(samples, sample_rate_hz, f0_track);
    if positions.len() < 5 {
        return None; // fewer than 4 periods
    }
    let periods: Vec<f64> = positions.windows(2).map(|w| w[1] - w[0]).collect();
    let mean_period = periods.iter().sum::<f64>() / periods.len() as f64;
    if mean_period <= 0.0 {
        return None;
    }
    let period_diffs: f64 = periods.windows(2).map(|w| (w[1] - w[0]).abs()).sum();
    let jitter_pct = period_diffs / (periods.len() - 1) as f64 / mean_period * 100.0;

    let mean_amp = amplitudes.iter().map(|a| a.abs()).sum::<f64>() / amplitudes.len() as f64;
    if mean_amp <= 0.0 {
        return None;
    }
    let amp_diffs: f64 = amplitudes.windows(2).map(|w| (w[1] - w[0]).abs()).sum();
    let shimmer_pct = amp_diffs / (amplitudes.len() - 1) as f64 / mean_amp * 100.0;

    Some((jitter_pct, shimmer_pct))
}
