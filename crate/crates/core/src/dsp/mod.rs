//! Paralinguistic feature extraction: 25 low-level descriptors in six
//! groups (energy, MFCC, pitch, formant, spectral, voice quality) from raw
//! audio, pooled to per-utterance vectors by arithmetic mean.
//!
//! Two window regimes share a 10 ms hop: 60 ms frames for pitch, HNR,
//! jitter, and shimmer (at least two periods of the lowest F0), 25 ms frames
//! for everything spectral. Frames of both regimes are center-aligned.
//! Voiced-only descriptors are undefined on unvoiced frames and excluded
//! from pooling rather than zero-filled.

mod formant;
mod pitch;
mod spectral;
mod wav;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use formant::{estimate_formants, levinson_durbin, pre_emphasis};
pub use pitch::{compute_hnr, compute_jitter_shimmer, estimate_f0, hnr_from_autocorr, PitchEstimate};
pub use spectral::{
    compute_spectral_group, dct_ii_orthonormal, normalized_magnitude, spectral_flux,
    SpectralMeasures, SpectrumAnalyzer,
};
pub use wav::{read_wav, write_wav};

#[derive(Debug, Error)]
pub enum DspError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("not a RIFF/WAVE file: {0}")]
    BadRiff(String),
    #[error("unsupported encoding: {0}")]
    UnsupportedEncoding(String),
    #[error("truncated chunk: {0}")]
    TruncatedChunk(String),
    #[error("non-finite sample at index {0}")]
    NonFiniteSample(usize),
    #[error("empty input")]
    EmptyInput,
    #[error("audio too short: {samples} samples, need {needed} for one pitch window")]
    TooShort { samples: usize, needed: usize },
    #[error("invalid dsp config: {0}")]
    BadConfig(String),
}

/// Mono audio in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioBuffer {
    pub samples: Vec<f32>,
    pub sample_rate_hz: u32,
}

impl AudioBuffer {
    pub fn new(samples: Vec<f32>, sample_rate_hz: u32) -> Result<Self, DspError> {
        if sample_rate_hz == 0 {
            return Err(DspError::BadConfig("sample rate must be > 0".into()));
        }
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(DspError::NonFiniteSample(i));
        }
        Ok(Self {
            samples,
            sample_rate_hz,
        })
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz as f64
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DspConfig {
    pub f0_min_hz: f64,
    pub f0_max_hz: f64,
    pub voicing_threshold: f64,
    pub pitch_win_s: f64,
    pub spec_win_s: f64,
    pub hop_s: f64,
    pub preemphasis: f64,
    pub lpc_order: usize,
    pub fft_size: usize,
    pub n_mels: usize,
    pub mel_fmin_hz: f64,
    pub mel_fmax_hz: f64,
}

impl Default for DspConfig {
    fn default() -> Self {
        Self {
            f0_min_hz: 55.0,
            // High ceiling so infant vocalizations stay in range.
            f0_max_hz: 1000.0,
            voicing_threshold: 0.45,
            pitch_win_s: 0.060,
            spec_win_s: 0.025,
            hop_s: 0.010,
            preemphasis: 0.97,
            lpc_order: 12,
            fft_size: 512,
            n_mels: 26,
            mel_fmin_hz: 20.0,
            mel_fmax_hz: 8000.0,
        }
    }
}

/// One vocal-tract resonance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Formant {
    pub freq_hz: f64,
    pub bw_hz: f64,
}

/// The 25 low-level descriptors of one analysis frame. `None` marks values
/// undefined on this frame (unvoiced, missing formant, or too few periods).
#[derive(Debug, Clone, PartialEq)]
pub struct LldFrame {
    pub t_s: f64,
    pub loudness_db: f64,
    pub hnr_db: Option<f64>,
    pub mfcc: [f64; 4],
    pub f0_hz: f64,
    pub voiced: bool,
    pub formants: [Option<Formant>; 3],
    pub alpha_ratio_db: f64,
    pub hammarberg_db: f64,
    pub slope_0_500: f64,
    pub slope_500_1500: f64,
    pub formant_rel_energy_db: [Option<f64>; 3],
    pub h1_h2_db: Option<f64>,
    pub h1_a3_db: Option<f64>,
    pub spectral_flux: f64,
    pub jitter_pct: Option<f64>,
    pub shimmer_pct: Option<f64>,
}

/// Names of the 25 LLD streams in group order; also the CSV column order
/// after the timing columns.
pub const LLD_NAMES: [&str; 25] = [
    "loudness_db",
    "hnr_db",
    "mfcc1",
    "mfcc2",
    "mfcc3",
    "mfcc4",
    "f0_hz",
    "f1_hz",
    "f1_bw_hz",
    "f2_hz",
    "f2_bw_hz",
    "f3_hz",
    "f3_bw_hz",
    "alpha_ratio_db",
    "hammarberg_db",
    "slope_0_500",
    "slope_500_1500",
    "f1_rel_energy_db",
    "f2_rel_energy_db",
    "f3_rel_energy_db",
    "h1_h2_db",
    "h1_a3_db",
    "spectral_flux",
    "shimmer_pct",
    "jitter_pct",
];

/// The six feature groups.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureGroup {
    Energy,
    Mfcc,
    Pitch,
    Formant,
    Spectral,
    VoiceQuality,
}

impl FeatureGroup {
    pub const ALL: [FeatureGroup; 6] = [
        FeatureGroup::Energy,
        FeatureGroup::Mfcc,
        FeatureGroup::Pitch,
        FeatureGroup::Formant,
        FeatureGroup::Spectral,
        FeatureGroup::VoiceQuality,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            FeatureGroup::Energy => "energy",
            FeatureGroup::Mfcc => "mfcc",
            FeatureGroup::Pitch => "pitch",
            FeatureGroup::Formant => "formant",
            FeatureGroup::Spectral => "spectral",
            FeatureGroup::VoiceQuality => "voice_quality",
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            FeatureGroup::Energy => 2,
            FeatureGroup::Mfcc => 4,
            FeatureGroup::Pitch => 1,
            FeatureGroup::Formant => 6,
            FeatureGroup::Spectral => 10,
            FeatureGroup::VoiceQuality => 2,
        }
    }
}

/// Per-utterance pooled descriptors, grouped with dimensions (2,4,1,6,10,2).
/// `voiced_fallback` is set when the utterance had no voiced frames and the
/// voiced-only entries were neutralized to 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureGroupVector {
    pub energy: [f64; 2],
    pub mfcc: [f64; 4],
    pub pitch: [f64; 1],
    pub formant: [f64; 6],
    pub spectral: [f64; 10],
    pub voice_quality: [f64; 2],
    pub voiced_fallback: bool,
}

impl FeatureGroupVector {
    pub fn group(&self, g: FeatureGroup) -> &[f64] {
        match g {
            FeatureGroup::Energy => &self.energy,
            FeatureGroup::Mfcc => &self.mfcc,
            FeatureGroup::Pitch => &self.pitch,
            FeatureGroup::Formant => &self.formant,
            FeatureGroup::Spectral => &self.spectral,
            FeatureGroup::VoiceQuality => &self.voice_quality,
        }
    }

    /// All 25 descriptors, groups concatenated in canonical order.
    pub fn flat(&self) -> [f64; 25] {
        let mut out = [0.0; 25];
        let mut at = 0;
        for g in FeatureGroup::ALL {
            for &v in self.group(g) {
                out[at] = v;
                at += 1;
            }
        }
        out
    }
}

/// Extracts the full per-frame LLD set from one utterance.
pub fn extract_lld(audio: &AudioBuffer, cfg: &DspConfig) -> Result<Vec<LldFrame>, DspError> {
    let fs = audio.sample_rate_hz;
    let n = audio.samples.len();
    if n == 0 {
        return Err(DspError::EmptyInput);
    }
    let pitch_len = (cfg.pitch_win_s * fs as f64).round() as usize;
    let spec_len = (cfg.spec_win_s * fs as f64).round() as usize;
    let hop = (cfg.hop_s * fs as f64).round() as usize;
    if pitch_len < 2 || spec_len < 2 || hop == 0 {
        return Err(DspError::BadConfig(
            "windows and hop must span at least a few samples".into(),
        ));
    }
    if spec_len > pitch_len {
        return Err(DspError::BadConfig(
            "spec_win_s must not exceed pitch_win_s".into(),
        ));
    }
    if n < pitch_len {
        return Err(DspError::TooShort {
            samples: n,
            needed: pitch_len,
        });
    }

    let analyzer = SpectrumAnalyzer::new(spec_len, fs, cfg);
    let half_p = pitch_len / 2;
    let half_s = spec_len / 2;

    let mut frames = Vec::new();
    let mut prev_norm_mag: Option<Vec<f64>> = None;
    let mut i = 0usize;
    loop {
        let start_p = i * hop;
        if start_p + pitch_len > n {
            break;
        }
        let center = start_p + half_p;
        let pw = &audio.samples[start_p..start_p + pitch_len];
        let sw = &audio.samples[center - half_s..center - half_s + spec_len];
        let t_s = center as f64 / fs as f64;

        let est = estimate_f0(pw, fs, cfg);
        let hnr_db = est.voiced.then(|| compute_hnr(pw, est.lag));

        let rms = (sw.iter().map(|&s| (s as f64) * (s as f64)).sum::<f64>()
            / sw.len() as f64)
            .sqrt();
        let loudness_db = 20.0 * (rms + 1e-10).log10();

        let power = analyzer.power_spectrum(sw);
        let mfcc = analyzer.mfcc_from_power(&power);
        let formants = estimate_formants(sw, fs, cfg).unwrap_or([None; 3]);
        let f0_opt = est.voiced.then_some(est.f0_hz);
        let spec = compute_spectral_group(&power, analyzer.bin_hz(), f0_opt, &formants);

        let norm_mag = normalized_magnitude(&power);
        let flux = match &prev_norm_mag {
            Some(prev) => spectral_flux(prev, &norm_mag),
            None => 0.0,
        };
        prev_norm_mag = Some(norm_mag);

        frames.push(LldFrame {
            t_s,
            loudness_db,
            hnr_db,
            mfcc,
            f0_hz: est.f0_hz,
            voiced: est.voiced,
            formants,
            alpha_ratio_db: spec.alpha_ratio_db,
            hammarberg_db: spec.hammarberg_db,
            slope_0_500: spec.slope_0_500,
            slope_500_1500: spec.slope_500_1500,
            formant_rel_energy_db: spec.formant_rel_energy_db,
            h1_h2_db: spec.h1_h2_db,
            h1_a3_db: spec.h1_a3_db,
            spectral_flux: flux,
            jitter_pct: None,
            shimmer_pct: None,
        });
        i += 1;
    }

    // Jitter and shimmer per maximal voiced run, assigned to its frames.
    let mut run_start: Option<usize> = None;
    let n_frames = frames.len();
    for idx in 0..=n_frames {
        let voiced = idx < n_frames && frames[idx].voiced;
        if voiced && run_start.is_none() {
            run_start = Some(idx);
        }
        if !voiced {
            if let Some(a) = run_start.take() {
                let b = idx - 1;
                let lo = a * hop;
                let hi = (b * hop + pitch_len).min(n);
                let region = &audio.samples[lo..hi];
                let track: Vec<(f64, f64)> = (a..=b)
                    .map(|k| (frames[k].t_s - lo as f64 / fs as f64, frames[k].f0_hz))
                    .collect();
                if let Some((jitter, shimmer)) = compute_jitter_shimmer(region, fs, &track) {
                    for frame in &mut frames[a..=b] {
                        frame.jitter_pct = Some(jitter);
                        frame.shimmer_pct = Some(shimmer);
                    }
                }
            }
        }
    }

    Ok(frames)
}

fn mean_all<'a>(frames: impl Iterator<Item = &'a LldFrame>, f: impl Fn(&LldFrame) -> f64) -> f64 {
    let mut total = 0.0;
    let mut count = 0usize;
    for frame in frames {
        total += f(frame);
        count += 1;
    }
    if count == 0 {
        0.0
    } else {
        total / count as f64
    }
}

fn mean_defined<'a>(
    frames: impl Iterator<Item = &'a LldFrame>,
    f: impl Fn(&LldFrame) -> Option<f64>,
) -> f64 {
    let mut total = 0.0;
    let mut count = 0usize;
    for frame in frames {
        if let Some(v) = f(frame) {
            total += v;
            count += 1;
        }
    }
    if count == 0 {
        0.0
    } else {
        total / count as f64
    }
}

/// Pools per-frame LLDs to one grouped vector by arithmetic mean.
/// Voiced-only descriptors average over the frames where they are defined;
/// the rest average over all frames. With no voiced frames at all, the
/// voiced-only entries are set to 0 and `voiced_fallback` is raised.
pub fn utterance_functionals(frames: &[LldFrame]) -> Result<FeatureGroupVector, DspError> {
    if frames.is_empty() {
        return Err(DspError::EmptyInput);
    }
    let voiced_fallback = !frames.iter().any(|f| f.voiced);

    let energy = [
        mean_all(frames.iter(), |f| f.loudness_db),
        mean_defined(frames.iter(), |f| f.hnr_db),
    ];
    let mfcc = [
        mean_all(frames.iter(), |f| f.mfcc[0]),
        mean_all(frames.iter(), |f| f.mfcc[1]),
        mean_all(frames.iter(), |f| f.mfcc[2]),
        mean_all(frames.iter(), |f| f.mfcc[3]),
    ];
    let pitch = [mean_defined(frames.iter(), |f| {
        f.voiced.then_some(f.f0_hz)
    })];
    let mut formant = [0.0; 6];
    for i in 0..3 {
        formant[2 * i] = mean_defined(frames.iter(), |f| {
            f.voiced.then(|| f.formants[i].map(|x| x.freq_hz)).flatten()
        });
        formant[2 * i + 1] = mean_defined(frames.iter(), |f| {
            f.voiced.then(|| f.formants[i].map(|x| x.bw_hz)).flatten()
        });
    }
    let spectral = [
        mean_all(frames.iter(), |f| f.alpha_ratio_db),
        mean_all(frames.iter(), |f| f.hammarberg_db),
        mean_all(frames.iter(), |f| f.slope_0_500),
        mean_all(frames.iter(), |f| f.slope_500_1500),
        mean_defined(frames.iter(), |f| f.formant_rel_energy_db[0]),
        mean_defined(frames.iter(), |f| f.formant_rel_energy_db[1]),
        mean_defined(frames.iter(), |f| f.formant_rel_energy_db[2]),
        mean_defined(frames.iter(), |f| f.h1_h2_db),
        mean_defined(frames.iter(), |f| f.h1_a3_db),
        mean_all(frames.iter(), |f| f.spectral_flux),
    ];
    let voice_quality = [
        mean_defined(frames.iter(), |f| f.shimmer_pct),
        mean_defined(frames.iter(), |f| f.jitter_pct),
    ];

    Ok(FeatureGroupVector {
        energy,
        mfcc,
        pitch,
        formant,
        spectral,
        voice_quality,
        voiced_fallback,
    })
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Writes per-frame LLDs as CSV: timing columns (`t_s`, `voiced`) then the
/// 25 descriptor columns; undefined values are empty cells.
pub fn write_lld_csv(path: impl AsRef<Path>, frames: &[LldFrame]) -> Result<(), DspError> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "t_s,voiced,{}", LLD_NAMES.join(","))?;
    for f in frames {
        let formant_cols: Vec<String> = f
            .formants
            .iter()
            .flat_map(|o| [fmt_opt(o.map(|x| x.freq_hz)), fmt_opt(o.map(|x| x.bw_hz))])
            .collect();
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            f.t_s,
            u8::from(f.voiced),
            f.loudness_db,
            fmt_opt(f.hnr_db),
            f.mfcc[0],
            f.mfcc[1],
            f.mfcc[2],
            f.mfcc[3],
            f.f0_hz,
            formant_cols.join(","),
            f.alpha_ratio_db,
            f.hammarberg_db,
            f.slope_0_500,
            f.slope_500_1500,
            fmt_opt(f.formant_rel_energy_db[0]),
            fmt_opt(f.formant_rel_energy_db[1]),
            fmt_opt(f.formant_rel_energy_db[2]),
            fmt_opt(f.h1_h2_db),
            fmt_opt(f.h1_a3_db),
            f.spectral_flux,
            fmt_opt(f.shimmer_pct),
            fmt_opt(f.jitter_pct),
        )?;
    }
    w.flush()?;
    Ok(())
}

/// One utterance's pooled feature vector for JSON-lines output.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FunctionalsRecord {
    pub utterance_id: String,
    #[serde(flatten)]
    pub features: FeatureGroupVector,
}

pub fn write_functionals_jsonl(
    path: impl AsRef<Path>,
    records: &[FunctionalsRecord],
) -> Result<(), DspError> {
    let mut w = BufWriter::new(File::create(path)?);
    for r in records {
        writeln!(w, "{}", serde_json::to_string(r).expect("serializable"))?;
    }
    w.flush()?;
    Ok(())
}
