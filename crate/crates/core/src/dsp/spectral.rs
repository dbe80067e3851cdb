//! Short-time spectral measurements: MFCC, band energy ratios, spectral
//! slopes, harmonic differences, formant relative energies, and flux.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use super::{DspConfig, Formant};

const POWER_FLOOR: f64 = 1e-10;

/// Hamming-windowed FFT frontend with a precomputed mel filterbank. One
/// analyzer per utterance keeps extraction reentrant across threads.
pub struct SpectrumAnalyzer {
    fft: Arc<dyn Fft<f64>>,
    fft_size: usize,
    window: Vec<f64>,
    mel_filters: Vec<Vec<(usize, f64)>>,
    bin_hz: f64,
}

fn hamming(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 0.54 - 0.46 * (std::f64::consts::TAU * i as f64 / (n - 1) as f64).cos())
        .collect()
}

fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10.0f64.powf(mel / 2595.0) - 1.0)
}

impl SpectrumAnalyzer {
    pub fn new(frame_len: usize, sample_rate_hz: u32, cfg: &DspConfig) -> Self {
        let fft_size = cfg.fft_size;
        let fs = sample_rate_hz as f64;
        let bin_hz = fs / fft_size as f64;
        let n_bins = fft_size / 2 + 1;

        let fmax = cfg.mel_fmax_hz.min(fs / 2.0);
        let mel_lo = hz_to_mel(cfg.mel_fmin_hz);
        let mel_hi = hz_to_mel(fmax);
        let n_mels = cfg.n_mels;
        let edges: Vec<f64> = (0..n_mels + 2)
            .map(|i| mel_to_hz(mel_lo + (mel_hi - mel_lo) * i as f64 / (n_mels + 1) as f64))
            .collect();
        let mut mel_filters = Vec::with_capacity(n_mels);
        for m in 1..=n_mels {
            let (lo, center, hi) = (edges[m - 1], edges[m], edges[m + 1]);
            let mut taps = Vec::new();
            for k in 0..n_bins {
                let f = k as f64 * bin_hz;
                let w = if f >= lo && f < center {
                    (f - lo) / (center - lo)
                } else if f >= center && f <= hi {
                    (hi - f) / (hi - center)
                } else {
                    0.0
                };
                if w > 0.0 {
                    taps.push((k, w));
                }
            }
            mel_filters.push(taps);
        }

        Self {
            fft: FftPlanner::new().plan_fft_forward(fft_size),
            fft_size,
            window: hamming(frame_len),
            mel_filters,
            bin_hz,
        }
    }

    pub fn bin_hz(&self) -> f64 {
        self.bin_hz
    }

    pub fn n_bins(&self) -> usize {
        self.fft_size / 2 + 1
    }

    /// Power spectrum of a Hamming-windowed, zero-padded frame.
    pub fn power_spectrum(&self, frame: &[f32]) -> Vec<f64> {
        let mut buf: Vec<Complex<f64>> = vec![Complex::new(0.0, 0.0); self.fft_size];
        for (i, (&s, w)) in frame.iter().zip(&self.window).enumerate() {
            buf[i] = Complex::new(s as f64 * w, 0.0);
        }
        self.fft.process(&mut buf);
        buf[..self.n_bins()].iter().map(|c| c.norm_sqr()).collect()
    }

    /// Log mel-filterbank energies (natural log, floored at 1e-10).
    pub fn mel_log_energies(&self, power: &[f64]) -> Vec<f64> {
        self.mel_filters
            .iter()
            .map(|taps| {
                let e: f64 = taps.iter().map(|&(k, w)| power[k] * w).sum();
                e.max(POWER_FLOOR).ln()
            })
            .collect()
    }

    /// MFCC coefficients 1-4 (orthonormal DCT-II of the log mel energies,
    /// c0 excluded).
    pub fn mfcc_from_power(&self, power: &[f64]) -> [f64; 4] {
        let logm = self.mel_log_energies(power);
        let mut out = [0.0; 4];
        for (i, slot) in out.iter_mut().enumerate() {
            *slot = dct_ii_orthonormal(&logm, i + 1);
        }
        out
    }
}

/// Single coefficient of the orthonormal DCT-II.
pub fn dct_ii_orthonormal(input: &[f64], k: usize) -> f64 {
    let m = input.len();
    let scale = if k == 0 {
        (1.0 / m as f64).sqrt()
    } else {
        (2.0 / m as f64).sqrt()
    };
    let acc: f64 = input
        .iter()
        .enumerate()
        .map(|(i, &v)| v * (std::f64::consts::PI * k as f64 * (2 * i + 1) as f64 / (2 * m) as f64).cos())
        .sum();
    scale * acc
}

/// The ten spectral-group descriptors of one frame; harmonic-derived entries
/// are `None` on unvoiced frames, formant-relative entries additionally need
/// the formant to exist.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralMeasures {
    pub alpha_ratio_db: f64,
    pub hammarberg_db: f64,
    pub slope_0_500: f64,
    pub slope_500_1500: f64,
    pub formant_rel_energy_db: [Option<f64>; 3],
    pub h1_h2_db: Option<f64>,
    pub h1_a3_db: Option<f64>,
}

fn band_power(power: &[f64], bin_hz: f64, lo: f64, hi: f64) -> f64 {
    power
        .iter()
        .enumerate()
        .filter(|(k, _)| {
            let f = *k as f64 * bin_hz;
            f >= lo && f < hi
        })
        .map(|(_, &p)| p)
        .sum()
}

fn band_max(power: &[f64], bin_hz: f64, lo: f64, hi: f64) -> f64 {
    power
        .iter()
        .enumerate()
        .filter(|(k, _)| {
            let f = *k as f64 * bin_hz;
            f >= lo && f < hi
        })
        .map(|(_, &p)| p)
        .fold(0.0, f64::max)
}

fn db(p: f64) -> f64 {
    10.0 * p.max(POWER_FLOOR).log10()
}

/// Least-squares slope of the dB spectrum against frequency over `[lo, hi)`,
/// in dB per Hz.
fn spectral_slope(power: &[f64], bin_hz: f64, lo: f64, hi: f64) -> f64 {
    let pts: Vec<(f64, f64)> = power
        .iter()
        .enumerate()
        .filter_map(|(k, &p)| {
            let f = k as f64 * bin_hz;
            (f >= lo && f < hi).then(|| (f, db(p)))
        })
        .collect();
    if pts.len() < 2 {
        return 0.0;
    }
    let n = pts.len() as f64;
    let mean_f = pts.iter().map(|(f, _)| f).sum::<f64>() / n;
    let mean_l = pts.iter().map(|(_, l)| l).sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var = 0.0;
    for (f, l) in &pts {
        cov += (f - mean_f) * (l - mean_l);
        var += (f - mean_f) * (f - mean_f);
    }
    if var <= 0.0 {
        0.0
    } else {
        cov / var
    }
}

/// Interpolated dB level of the strongest bin whose frequency lies in
/// `[lo, hi]`, parabolic in the dB domain. `None` when the band is empty or
/// carries no energy above the floor.
fn peak_db_in_band(power: &[f64], bin_hz: f64, lo: f64, hi: f64) -> Option<f64> {
    let k_lo = (lo / bin_hz).ceil().max(0.0) as usize;
    let k_hi = ((hi / bin_hz).floor() as usize).min(power.len().saturating_sub(1));
    if k_lo > k_hi {
        return None;
    }
    let mut best = k_lo;
    for k in k_lo..=k_hi {
        if power[k] > power[best] {
            best = k;
        }
    }
    if power[best] <= POWER_FLOOR {
        return None;
    }
    let level = |k: usize| db(power[k]);
    if best == 0 || best + 1 >= power.len() {
        return Some(level(best));
    }
    let (l, c, r) = (level(best - 1), level(best), level(best + 1));
    let denom = l - 2.0 * c + r;
    if denom.abs() < 1e-30 {
        return Some(c);
    }
    let delta = (0.5 * (l - r) / denom).clamp(-0.5, 0.5);
    Some(c - 0.25 * (l - r) * delta)
}

/// Interpolated dB level of the harmonic peak nearest `freq`, searched
/// within a quarter of the harmonic spacing.
fn harmonic_peak_db(power: &[f64], bin_hz: f64, freq: f64, f0: f64) -> Option<f64> {
    let nyquist = (power.len() - 1) as f64 * bin_hz;
    if freq <= 0.0 || freq >= nyquist {
        return None;
    }
    let half_window = (f0 / 4.0).max(bin_hz);
    peak_db_in_band(power, bin_hz, freq - half_window, freq + half_window)
}

/// dB level of the spectral local maximum nearest `freq` (for formant
/// relative energies).
fn nearest_local_peak_db(power: &[f64], bin_hz: f64, freq: f64) -> Option<f64> {
    let mut best: Option<(f64, usize)> = None;
    for k in 1..power.len() - 1 {
        if power[k] > power[k - 1] && power[k] >= power[k + 1] && power[k] > POWER_FLOOR {
            let dist = (k as f64 * bin_hz - freq).abs();
            if best.is_none_or(|(d, _)| dist < d) {
                best = Some((dist, k));
            }
        }
    }
    let (_, k) = best?;
    let level = |k: usize| db(power[k]);
    let (l, c, r) = (level(k - 1), level(k), level(k + 1));
    let denom = l - 2.0 * c + r;
    if denom.abs() < 1e-30 {
        return Some(c);
    }
    let delta = (0.5 * (l - r) / denom).clamp(-0.5, 0.5);
    Some(c - 0.25 * (l - r) * delta)
}

/// Computes the spectral group from one frame's power spectrum. `f0_hz` is
/// `None` for unvoiced frames, which leaves every harmonic-derived entry
/// undefined.
pub fn compute_spectral_group(
    power: &[f64],
    bin_hz: f64,
    f0_hz: Option<f64>,
    formants: &[Option<Formant>; 3],
) -> SpectralMeasures {
    let alpha_low = band_power(power, bin_hz, 50.0, 1000.0);
    let alpha_high = band_power(power, bin_hz, 1000.0, 5000.0);
    let alpha_ratio_db = db(alpha_low) - db(alpha_high);

    let ham_low = band_max(power, bin_hz, 0.0, 2000.0);
    let ham_high = band_max(power, bin_hz, 2000.0, 5000.0);
    let hammarberg_db = db(ham_low) - db(ham_high);

    let slope_0_500 = spectral_slope(power, bin_hz, 0.0, 500.0);
    let slope_500_1500 = spectral_slope(power, bin_hz, 500.0, 1500.0);

    let h1 = f0_hz.and_then(|f0| harmonic_peak_db(power, bin_hz, f0, f0));
    let h2 = f0_hz.and_then(|f0| harmonic_peak_db(power, bin_hz, 2.0 * f0, f0));
    let h1_h2_db = match (h1, h2) {
        (Some(a), Some(b)) => Some(a - b),
        _ => None,
    };

    let mut formant_rel_energy_db = [None; 3];
    if let Some(h1_db) = h1 {
        for (i, f) in formants.iter().enumerate() {
            if let Some(f) = f {
                formant_rel_energy_db[i] =
                    nearest_local_peak_db(power, bin_hz, f.freq_hz).map(|p| p - h1_db);
            }
        }
    }

    // Strongest harmonic inside F3 +- bw3/2.
    let h1_a3_db = match (h1, f0_hz, formants[2]) {
        (Some(h1_db), Some(f0), Some(f3)) => {
            let lo = f3.freq_hz - f3.bw_hz / 2.0;
            let hi = f3.freq_hz + f3.bw_hz / 2.0;
            let mut strongest: Option<f64> = None;
            let mut k = 1;
            loop {
                let f = k as f64 * f0;
                if f > hi {
                    break;
                }
                if f >= lo {
                    if let Some(p) = harmonic_peak_db(power, bin_hz, f, f0) {
                        strongest = Some(strongest.map_or(p, |s: f64| s.max(p)));
                    }
                }
                k += 1;
            }
            strongest.map(|a3| h1_db - a3)
        }
        _ => None,
    };

    SpectralMeasures {
        alpha_ratio_db,
        hammarberg_db,
        slope_0_500,
        slope_500_1500,
        formant_rel_energy_db,
        h1_h2_db,
        h1_a3_db,
    }
}

/// L1-normalized magnitude spectrum (all zeros for a silent frame).
pub fn normalized_magnitude(power: &[f64]) -> Vec<f64> {
    let mags: Vec<f64> = power.iter().map(|&p| p.sqrt()).collect();
    let total: f64 = mags.iter().sum();
    if total <= 0.0 {
        return vec![0.0; mags.len()];
    }
    mags.into_iter().map(|m| m / total).collect()
}

/// Sum of squared differences between consecutive normalized magnitude
/// spectra; gain-invariant by construction.
pub fn spectral_flux(prev: &[f64], curr: &[f64]) -> f64 {
    prev.iter()
        .zip(curr)
        .map(|(a, b)| (a - b) * (a - b))
        .sum()
}
