//! Binary per-frame feature files and the dataset manifest.
//!
//! Feature file layout (all integers and floats little-endian):
//!
//! | offset | size | field |
//! |---|---|---|
//! | 0 | 4 | magic `HPMF` |
//! | 4 | 4 | version, u32 = 1 |
//! | 8 | 4 | dim, u32 |
//! | 12 | 4 | frames, u32 |
//! | 16 | 4·dim·frames | f32 payload, frame-major |

mod manifest;

use std::path::Path;

use thiserror::Error;

pub use manifest::{parse_dataset_manifest, BlockKind, DatasetManifest, ManifestEntry, ManifestError};

pub const FEATURE_MAGIC: [u8; 4] = *b"HPMF";
pub const FEATURE_VERSION: u32 = 1;
pub const HEADER_LEN: usize = 16;

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("bad magic {found:?}, expected \"HPMF\"")]
    BadMagic { found: [u8; 4] },
    #[error("unsupported feature file version {found}, expected {FEATURE_VERSION}")]
    VersionMismatch { found: u32 },
    #[error("truncated header: {actual} bytes, need {HEADER_LEN}")]
    TruncatedHeader { actual: usize },
    #[error("truncated payload: expected {expected} bytes, found {actual}")]
    TruncatedPayload { expected: usize, actual: usize },
    #[error("{extra} trailing bytes after payload")]
    TrailingBytes { extra: usize },
    #[error("dim and frames must both be at least 1 (dim {dim}, frames {frames})")]
    EmptyShape { dim: usize, frames: usize },
    #[error("data length {len} does not match {frames} frames x {dim} dims")]
    ShapeMismatch { len: usize, frames: usize, dim: usize },
    #[error("non-finite value at frame {frame}, dim {dim}")]
    NonFinite { frame: usize, dim: usize },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// An f x d matrix of per-frame features for one clip.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSequence {
    pub video_id: String,
    frames: usize,
    dim: usize,
    data: Vec<f32>,
}

impl FeatureSequence {
    pub fn new(video_id: impl Into<String>, frames: usize, dim: usize, data: Vec<f32>) -> Result<Self, FeatureError> {
        if frames == 0 || dim == 0 {
            return Err(FeatureError::EmptyShape { dim, frames });
        }
        if data.len() != frames * dim {
            return Err(FeatureError::ShapeMismatch { len: data.len(), frames, dim });
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(FeatureError::NonFinite { frame: i / dim, dim: i % dim });
        }
        Ok(Self {
            video_id: video_id.into(),
            frames,
            dim,
            data,
        })
    }

    pub fn from_rows(video_id: impl Into<String>, rows: &[Vec<f32>]) -> Result<Self, FeatureError> {
        let dim = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != dim) {
            return Err(FeatureError::ShapeMismatch {
                len: bad.len(),
                frames: 1,
                dim,
            });
        }
        Self::new(video_id, rows.len(), dim, rows.concat())
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, t: usize) -> &[f32] {
        &self.data[t * self.dim..(t + 1) * self.dim]
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }
}

pub fn encoded_len(dim: usize, frames: usize) -> usize {
    HEADER_LEN + 4 * dim * frames
}

pub fn write_feature_file(seq: &FeatureSequence) -> Vec<u8> {
    let mut out = Vec::with_capacity(encoded_len(seq.dim, seq.frames));
    out.extend_from_slice(&FEATURE_MAGIC);
    out.extend_from_slice(&FEATURE_VERSION.to_le_bytes());
    out.extend_from_slice(&(seq.dim as u32).to_le_bytes());
    out.extend_from_slice(&(seq.frames as u32).to_le_bytes());
    for v in &seq.data {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

fn le_u32(bytes: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(bytes[at..at + 4].try_into().expect("4-byte slice"))
}

/// Parses a feature file; `video_id` labels the resulting sequence.
pub fn read_feature_file(bytes: &[u8], video_id: &str) -> Result<FeatureSequence, FeatureError> {
    if bytes.len() < HEADER_LEN {
        if bytes.len() >= 4 && bytes[..4] != FEATURE_MAGIC {
            return Err(FeatureError::BadMagic {
                found: bytes[..4].try_into().expect("4-byte slice"),
            });
        }
        return Err(FeatureError::TruncatedHeader { actual: bytes.len() });
    }
    let magic: [u8; 4] = bytes[..4].try_into().expect("4-byte slice");
    if magic != FEATURE_MAGIC {
        return Err(FeatureError::BadMagic { found: magic });
    }
    let version = le_u32(bytes, 4);
    if version != FEATURE_VERSION {
        return Err(FeatureError::VersionMismatch { found: version });
    }
    let dim = le_u32(bytes, 8) as usize;
    let frames = le_u32(bytes, 12) as usize;
    if dim == 0 || frames == 0 {
        return Err(FeatureError::EmptyShape { dim, frames });
    }
    let expected = 4 * dim * frames;
    let actual = bytes.len() - HEADER_LEN;
    if actual < expected {
        return Err(FeatureError::TruncatedPayload { expected, actual });
    }
    if actual > expected {
        return Err(FeatureError::TrailingBytes { extra: actual - expected });
    }
    let data = bytes[HEADER_LEN..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("4-byte chunk")))
        .collect();
    FeatureSequence::new(video_id, frames, dim, data)
}

/// Reads a feature file from disk, using the file stem as video id.
pub fn load_feature_file(path: &Path) -> Result<FeatureSequence, FeatureError> {
    let bytes = std::fs::read(path).map_err(|source| FeatureError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let id = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    read_feature_file(&bytes, &id)
}
