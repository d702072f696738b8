//! Fourier temporal pyramid over per-frame feature sequences.
//!
//! Three levels halve the clip recursively (1 + 2 + 4 segments, the first half
//! of a split taking `floor(len / 2)` frames). Each segment of each feature
//! dimension contributes the magnitudes of its lowest DFT coefficients,
//! normalized by the segment length; segments shorter than the coefficient
//! count are zero-padded, empty segments emit zeros.
//!
//! Descriptor layout is dimension-major: for each dimension, the level-1
//! segment, then level-2 segments in order, then level-3 segments, each
//! holding coefficients `k = 0..n_coeffs`.

use std::f64::consts::TAU;
use std::ops::Range;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::featstore::FeatureSequence;

pub const LEVELS: usize = 3;
pub const SEGMENTS: usize = (1 << LEVELS) - 1;
pub const DEFAULT_COEFFS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FtpConfig {
    pub coefficients: usize,
    /// Scale every frame to unit L2 norm before encoding.
    pub frame_l2: bool,
}

impl Default for FtpConfig {
    fn default() -> Self {
        Self {
            coefficients: DEFAULT_COEFFS,
            frame_l2: false,
        }
    }
}

impl FtpConfig {
    pub fn descriptor_len(&self, dim: usize) -> usize {
        dim * SEGMENTS * self.coefficients
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FtpDescriptor {
    pub values: Vec<f64>,
    pub dim: usize,
    pub coefficients: usize,
}

impl FtpDescriptor {
    /// Coefficients of one segment (0-based over all 7) of one dimension.
    pub fn segment(&self, dim: usize, segment: usize) -> &[f64] {
        let start = (dim * SEGMENTS + segment) * self.coefficients;
        &self.values[start..start + self.coefficients]
    }
}

/// Frame ranges at one pyramid level (1-based), in temporal order.
pub fn segment_bounds(frames: usize, level: usize) -> Vec<Range<usize>> {
    assert!((1..=LEVELS).contains(&level), "pyramid level {level} out of range");
    let mut ranges = vec![0..frames];
    for _ in 1..level {
        ranges = ranges
            .into_iter()
            .flat_map(|r| {
                let mid = r.start + r.len() / 2;
                [r.start..mid, mid..r.end]
            })
            .collect();
    }
    ranges
}

/// All seven segments, level by level.
pub fn pyramid_segments(frames: usize) -> Vec<Range<usize>> {
    (1..=LEVELS).flat_map(|l| segment_bounds(frames, l)).collect()
}

/// `|X_k| / m` for `k < n_coeffs`, with the series zero-padded to at least
/// `n_coeffs` samples before the transform.
pub fn dft_lowfreq(series: &[f64], n_coeffs: usize) -> Vec<f64> {
    let m = series.len();
    let mut out = vec![0.0; n_coeffs];
    if m == 0 {
        return out;
    }
    let len = m.max(n_coeffs);
    for (k, slot) in out.iter_mut().enumerate() {
        let (mut re, mut im) = (0.0, 0.0);
        for (t, &s) in series.iter().enumerate() {
            let angle = TAU * ((k * t) % len) as f64 / len as f64;
            re += s * angle.cos();
            im -= s * angle.sin();
        }
        *slot = re.hypot(im) / m as f64;
    }
    out
}

/// Encodes a clip into its `dim * 7 * n_coeffs` descriptor.
pub fn ftp_encode(seq: &FeatureSequence, config: &FtpConfig) -> FtpDescriptor {
    let (frames, dim) = (seq.frames(), seq.dim());
    let scales: Vec<f64> = (0..frames)
        .map(|t| {
            if config.frame_l2 {
                let n = seq.row(t).iter().map(|&v| f64::from(v) * f64::from(v)).sum::<f64>().sqrt();
                if n > 0.0 {
                    1.0 / n
                } else {
                    0.0
                }
            } else {
                1.0
            }
        })
        .collect();
    let segments = pyramid_segments(frames);
    let per_dim = SEGMENTS * config.coefficients;
    let mut values = vec![0.0; config.descriptor_len(dim)];
    values.par_chunks_mut(per_dim).enumerate().for_each(|(j, out)| {
        let column: Vec<f64> = (0..frames).map(|t| f64::from(seq.row(t)[j]) * scales[t]).collect();
        for (s, range) in segments.iter().enumerate() {
            let coeffs = dft_lowfreq(&column[range.clone()], config.coefficients);
            out[s * config.coefficients..(s + 1) * config.coefficients].copy_from_slice(&coeffs);
        }
    });
    FtpDescriptor {
        values,
        dim,
        coefficients: config.coefficients,
    }
}
