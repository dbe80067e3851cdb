//! Minimal RIFF/WAVE reader and writer: 16-bit PCM or 32-bit float, mono or
//! stereo (stereo is averaged to mono on read).

use std::path::Path;

use super::{AudioBuffer, DspError};

fn u16_at(bytes: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([bytes[at], bytes[at + 1]])
}

fn u32_at(bytes: &[u8], at: usize) -> u32 {
    u32::from_le_bytes([bytes[at], bytes[at + 1], bytes[at + 2], bytes[at + 3]])
}

/// Reads a WAV file into normalized mono float samples. 16-bit PCM scales by
/// 1/32768 (so -32768 maps to exactly -1.0); float samples are clamped to
/// `[-1, 1]`; stereo channels are averaged.
pub fn read_wav(path: impl AsRef<Path>) -> Result<AudioBuffer, DspError> {
    let bytes = std::fs::read(path)?;
    if bytes.len() < 12 || &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(DspError::BadRiff("missing RIFF/WAVE header".into()));
    }

    let mut fmt: Option<(u16, u16, u32, u16)> = None;
    let mut data: Option<&[u8]> = None;
    let mut at = 12usize;
    while at + 8 <= bytes.len() {
        let id = &bytes[at..at + 4];
        let size = u32_at(&bytes, at + 4) as usize;
        let body_start = at + 8;
        let body_end = body_start
            .checked_add(size)
            .ok_or_else(|| DspError::TruncatedChunk("chunk size overflows".into()))?;
        if body_end > bytes.len() {
            return Err(DspError::TruncatedChunk(format!(
                "chunk {:?} promises {size} bytes past end of file",
                String::from_utf8_lossy(id)
            )));
        }
        let body = &bytes[body_start..body_end];
        match id {
            b"fmt " => {
                if body.len() < 16 {
                    return Err(DspError::TruncatedChunk("fmt chunk shorter than 16 bytes".into()));
                }
                fmt = Some((
                    u16_at(body, 0),
                    u16_at(body, 2),
                    u32_at(body, 4),
                    u16_at(body, 14),
                ));
            }
            b"data" => data = Some(body),
            _ => {}
        }
        at = body_end + (size & 1); // chunks are word-aligned
    }

    let (format, channels, sample_rate, bits) =
        fmt.ok_or_else(|| DspError::BadRiff("no fmt chunk".into()))?;
    let data = data.ok_or_else(|| DspError::BadRiff("no data chunk".into()))?;
    if channels == 0 || channels > 2 {
        return Err(DspError::UnsupportedEncoding(format!(
            "{channels} channels (mono or stereo only)"
        )));
    }
    let ch = channels as usize;

    let interleaved: Vec<f32> = match (format, bits) {
        (1, 16) => {
            if data.len() % 2 != 0 {
                return Err(DspError::TruncatedChunk("data chunk holds a partial sample".into()));
            }
            data.chunks_exact(2)
                .map(|c| i16::from_le_bytes([c[0], c[1]]) as f32 / 32768.0)
                .collect()
        }
        (3, 32) => {
            if data.len() % 4 != 0 {
                return Err(DspError::TruncatedChunk("data chunk holds a partial sample".into()));
            }
            data.chunks_exact(4)
                .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]).clamp(-1.0, 1.0))
                .collect()
        }
        _ => {
            return Err(DspError::UnsupportedEncoding(format!(
                "format tag {format} with {bits} bits"
            )))
        }
    };
    if interleaved.len() % ch != 0 {
        return Err(DspError::TruncatedChunk("data chunk holds a partial frame".into()));
    }

    let samples: Vec<f32> = if ch == 1 {
        interleaved
    } else {
        interleaved
            .chunks_exact(2)
            .map(|pair| (pair[0] + pair[1]) / 2.0)
            .collect()
    };
    if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
        return Err(DspError::NonFiniteSample(i));
    }
    AudioBuffer::new(samples, sample_rate)
}

/// Writes mono 16-bit PCM; used for fixtures and downstream tooling.
pub fn write_wav(path: impl AsRef<Path>, audio: &AudioBuffer) -> Result<(), DspError> {
    let n = audio.samples.len();
    let data_bytes = n * 2;
    let mut out = Vec::with_capacity(44 + data_bytes);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&((36 + data_bytes) as u32).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes()); // PCM
    out.extend_from_slice(&1u16.to_le_bytes()); // mono
    out.extend_from_slice(&audio.sample_rate_hz.to_le_bytes());
    out.extend_from_slice(&(audio.sample_rate_hz * 2).to_le_bytes());
    out.extend_from_slice(&2u16.to_le_bytes());
    out.extend_from_slice(&16u16.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&(data_bytes as u32).to_le_bytes());
    for &s in &audio.samples {
        let v = (s.clamp(-1.0, 1.0) * 32767.0).round() as i16;
        out.extend_from_slice(&v.to_le_bytes());
    }
    std::fs::write(path, out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tmp(name: &str) -> std::path::PathBuf {
        let dir = std::env::temp_dir().join("wav-tests");
        std::fs::create_dir_all(&dir).unwrap();
        dir.join(format!("{}-{}", std::process::id(), name))
    }

    #[test]
    fn second_of_zeros_round_trips() {
        let p = tmp("zeros.wav");
        let buf = AudioBuffer::new(vec![0.0; 16000], 16000).unwrap();
        write_wav(&p, &buf).unwrap();
        let back = read_wav(&p).unwrap();
        assert_eq!(back.samples.len(), 16000);
        assert_eq!(back.sample_rate_hz, 16000);
        assert!(back.samples.iter().all(|&s| s == 0.0));
    }

    #[test]
    fn pcm16_min_maps_to_minus_one() {
        let p = tmp("min.wav");
        let mut bytes = Vec::new();
        bytes.extend_from_slice(b"RIFF");
        bytes.extend_from_slice(&(36u32 + 2).to_le_bytes());
        bytes.extend_from_slice(b"WAVE");
        bytes.extend_from_slice(b"fmt ");
        bytes.extend_from_slice(&16u32.to_le_bytes());
        bytes.extend_from_slice(&1u16.to_le_bytes());
        bytes.extend_from_slice(&1u16.to_le_bytes());
        bytes.extend_from_slice(&16000u32.to_le_bytes());
        bytes.extend_from_slice(&32000u32.to_le_bytes());
        bytes.extend_from_slice(&2u16.to_le_bytes());
        bytes.extend_from_slice(&16u16.to_le_bytes());
        bytes.extend_from_slice(b"data");
        bytes.extend_from_slice(&2u32.to_le_bytes());
        bytes.extend_from_slice(&i16::MIN.to_le_bytes());
        std::fs::write(&p, bytes).unwrap();
        let buf = read_wav(&p).unwrap();
        assert_eq!(buf.samples, vec![-1.0]);
    }

    #[test]
    fn stereo_averages_channels() {
        let p = tmp("stereo.wav");
        let mut bytes = Vec::new();
        bytes.extend_from_slice(b"RIFF");
        bytes.extend_from_slice(&(36u32 + 8).to_le_bytes());
        bytes.extend_from_slice(b"WAVE");
        bytes.extend_from_slice(b"fmt ");
        bytes.extend_from_slice(&16u32.to_le_bytes());
        bytes.extend_from_slice(&3u16.to_le_bytes()); // float
        bytes.extend_from_slice(&2u16.to_le_bytes()); // stereo
        bytes.extend_from_slice(&16000u32.to_le_bytes());
        bytes.extend_from_slice(&128000u32.to_le_bytes());
        bytes.extend_from_slice(&8u16.to_le_bytes());
        bytes.extend_from_slice(&32u16.to_le_bytes());
        bytes.extend_from_slice(b"data");
        bytes.extend_from_slice(&8u32.to_le_bytes());
        bytes.extend_from_slice(&0.5f32.to_le_bytes());
        bytes.extend_from_slice(&(-0.5f32).to_le_bytes());
        std::fs::write(&p, bytes).unwrap();
        let buf = read_wav(&p).unwrap();
        assert_eq!(buf.samples, vec![0.0]);
    }

    #[test]
    fn truncated_and_unsupported_rejected() {
        let p = tmp("trunc.wav");
        let buf = AudioBuffer::new(vec![0.1; 100], 8000).unwrap();
        write_wav(&p, &buf).unwrap();
        let bytes = std::fs::read(&p).unwrap();
        std::fs::write(&p, &bytes[..bytes.len() - 10]).unwrap();
        assert!(matches!(read_wav(&p), Err(DspError::TruncatedChunk(_))));

        // 8-bit PCM is not supported.
        let p2 = tmp("u8.wav");
        let mut bytes = Vec::new();
        bytes.extend_from_slice(b"RIFF");
        bytes.extend_from_slice(&(36u32 + 1).to_le_bytes());
        bytes.extend_from_slice(b"WAVE");
        bytes.extend_from_slice(b"fmt ");
        bytes.extend_from_slice(&16u32.to_le_bytes());
        bytes.extend_from_slice(&1u16.to_le_bytes());
        bytes.extend_from_slice(&1u16.to_le_bytes());
        bytes.extend_from_slice(&8000u32.to_le_bytes());
        bytes.extend_from_slice(&8000u32.to_le_bytes());
        bytes.extend_from_slice(&1u16.to_le_bytes());
        bytes.extend_from_slice(&8u16.to_le_bytes());
        bytes.extend_from_slice(b"data");
        bytes.extend_from_slice(&1u32.to_le_bytes());
        bytes.push(0x80);
        std::fs::write(&p2, bytes).unwrap();
        assert!(matches!(
            read_wav(&p2),
            Err(DspError::UnsupportedEncoding(_))
        ));
    }
}
