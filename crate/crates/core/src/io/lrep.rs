//! The `LREP` binary container for layer-major representation tensors.
//!
//! Layout, all little-endian:
//!
//! ```text
//! magic "LREP" (4 bytes) | version u32 (=1) | n_layers u32 | n_frames u32
//! | dim u32 | frame_hop_s f64 | frame_offset_s f64
//! | payload: n_layers * n_frames * dim f32, layer-major
//! ```
//!
//! The container is intentionally minimal so that fixtures can be written
//! byte-exactly from any language.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use thiserror::Error;

/// Container magic, first four bytes of every tensor file.
pub const LREP_MAGIC: [u8; 4] = *b"LREP";
/// Current container version.
pub const LREP_VERSION: u32 = 1;

/// Default frame hop when a dump does not specify one (20 ms).
pub const DEFAULT_FRAME_HOP_S: f64 = 0.020;
/// Default time of the first frame center (12.5 ms).
pub const DEFAULT_FRAME_OFFSET_S: f64 = 0.0125;

#[derive(Debug, Error)]
pub enum LrepError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad magic {found:?}, expected {expected:?}")]
    BadMagic { found: [u8; 4], expected: [u8; 4] },
    #[error("unsupported container version {found}, expected {expected}")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("truncated payload: header promises {expected} bytes, found {found}")]
    TruncatedPayload { expected: usize, found: usize },
    #[error("trailing bytes after payload: {extra} extra")]
    TrailingBytes { extra: usize },
    #[error("non-finite value at flat index {index}")]
    NonFinite { index: usize },
    #[error("invalid header: {0}")]
    InvalidHeader(String),
}

/// Per-utterance activations, layer-major `[layer][frame][dim]`, with frame
/// timing metadata. Frame `i` is centered at `frame_offset_s + i * frame_hop_s`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReprTensor {
    n_layers: usize,
    n_frames: usize,
    dim: usize,
    frame_hop_s: f64,
    frame_offset_s: f64,
    values: Vec<f32>,
}

impl ReprTensor {
    /// Builds a tensor, validating the shape/payload invariants.
    pub fn new(
        n_layers: usize,
        n_frames: usize,
        dim: usize,
        frame_hop_s: f64,
        frame_offset_s: f64,
        values: Vec<f32>,
    ) -> Result<Self, LrepError> {
        if n_layers == 0 {
            return Err(LrepError::InvalidHeader("n_layers must be >= 1".into()));
        }
        if dim == 0 {
            return Err(LrepError::InvalidHeader("dim must be >= 1".into()));
        }
        if !(frame_hop_s > 0.0) {
            return Err(LrepError::InvalidHeader(format!(
                "frame_hop_s must be > 0, got {frame_hop_s}"
            )));
        }
        if !frame_offset_s.is_finite() {
            return Err(LrepError::InvalidHeader("frame_offset_s not finite".into()));
        }
        let expected = n_layers
            .checked_mul(n_frames)
            .and_then(|v| v.checked_mul(dim))
            .ok_or_else(|| LrepError::InvalidHeader("shape overflows usize".into()))?;
        if values.len() != expected {
            return Err(LrepError::InvalidHeader(format!(
                "payload holds {} values, shape {}x{}x{} needs {}",
                values.len(),
                n_layers,
                n_frames,
                dim,
                expected
            )));
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(LrepError::NonFinite { index });
        }
        Ok(Self {
            n_layers,
            n_frames,
            dim,
            frame_hop_s,
            frame_offset_s,
            values,
        })
    }

    pub fn n_layers(&self) -> usize {
        self.n_layers
    }

    pub fn n_frames(&self) -> usize {
        self.n_frames
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn frame_hop_s(&self) -> f64 {
        self.frame_hop_s
    }

    pub fn frame_offset_s(&self) -> f64 {
        self.frame_offset_s
    }

    /// Flat payload, layer-major.
    pub fn values(&self) -> &[f32] {
        &self.values
    }

    /// Center time of frame `i` in seconds.
    pub fn frame_center_s(&self, frame: usize) -> f64 {
        self.frame_offset_s + frame as f64 * self.frame_hop_s
    }

    /// One frame's activation vector for one layer.
    pub fn frame(&self, layer: usize, frame: usize) -> &[f32] {
        let base = (layer * self.n_frames + frame) * self.dim;
        &self.values[base..base + self.dim]
    }

    /// All frames of one layer, frame-major.
    pub fn layer(&self, layer: usize) -> &[f32] {
        let base = layer * self.n_frames * self.dim;
        &self.values[base..base + self.n_frames * self.dim]
    }
}

fn read_u32(r: &mut impl Read) -> Result<u32, LrepError> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64(r: &mut impl Read) -> Result<f64, LrepError> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

/// Reads an `LREP` file, validating magic, version, header fields, and that
/// the payload length matches the header exactly.
pub fn read_repr_tensor(path: impl AsRef<Path>) -> Result<ReprTensor, LrepError> {
    let mut file = File::open(path)?;
    let mut magic = [0u8; 4];
    file.read_exact(&mut magic)?;
    if magic != LREP_MAGIC {
        return Err(LrepError::BadMagic {
            found: magic,
            expected: LREP_MAGIC,
        });
    }
    let version = read_u32(&mut file)?;
    if version != LREP_VERSION {
        return Err(LrepError::VersionMismatch {
            found: version,
            expected: LREP_VERSION,
        });
    }
    let n_layers = read_u32(&mut file)? as usize;
    let n_frames = read_u32(&mut file)? as usize;
    let dim = read_u32(&mut file)? as usize;
    let frame_hop_s = read_f64(&mut file)?;
    let frame_offset_s = read_f64(&mut file)?;

    let n_values = n_layers
        .checked_mul(n_frames)
        .and_then(|v| v.checked_mul(dim))
        .ok_or_else(|| LrepError::InvalidHeader("shape overflows usize".into()))?;
    let expected_bytes = n_values
        .checked_mul(4)
        .ok_or_else(|| LrepError::InvalidHeader("payload size overflows usize".into()))?;

    let mut payload = Vec::new();
    file.read_to_end(&mut payload)?;
    if payload.len() < expected_bytes {
        return Err(LrepError::TruncatedPayload {
            expected: expected_bytes,
            found: payload.len(),
        });
    }
    if payload.len() > expected_bytes {
        return Err(LrepError::TrailingBytes {
            extra: payload.len() - expected_bytes,
        });
    }

    let mut values = Vec::with_capacity(n_values);
    for chunk in payload.chunks_exact(4) {
        values.push(f32::from_le_bytes([chunk[0], chunk[1], chunk[2], chunk[3]]));
    }
    ReprTensor::new(n_layers, n_frames, dim, frame_hop_s, frame_offset_s, values)
}

/// Writes a tensor in the `LREP` layout. Round-trips byte-exactly with
/// [`read_repr_tensor`].
pub fn write_repr_tensor(path: impl AsRef<Path>, tensor: &ReprTensor) -> Result<(), LrepError> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&LREP_MAGIC)?;
    w.write_all(&LREP_VERSION.to_le_bytes())?;
    w.write_all(&(tensor.n_layers as u32).to_le_bytes())?;
    w.write_all(&(tensor.n_frames as u32).to_le_bytes())?;
    w.write_all(&(tensor.dim as u32).to_le_bytes())?;
    w.write_all(&tensor.frame_hop_s.to_le_bytes())?;
    w.write_all(&tensor.frame_offset_s.to_le_bytes())?;
    for v in &tensor.values {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}
