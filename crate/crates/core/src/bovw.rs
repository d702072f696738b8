//! Bag-of-visual-words histograms over a trajectory codebook, and k-means
//! codebook fitting.
//!
//! Codebook file: magic `BOVW`, u32 version 1, u32 K, u32 d, then K·d
//! little-endian f32 centroids row-major. `meta` is not stored in the file.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const CODEBOOK_MAGIC: [u8; 4] = *b"BOVW";
pub const CODEBOOK_VERSION: u32 = 1;
pub const DEFAULT_K: usize = 2000;

#[derive(Debug, Error, PartialEq)]
pub enum BovwError {
    #[error("need at least k = {k} descriptors, got {n}")]
    TooFewDescriptors { n: usize, k: usize },
    #[error("k must be at least 1")]
    ZeroK,
    #[error("descriptor dimension {found} does not match codebook dimension {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("non-finite value in row {0}")]
    NonFinite(usize),
    #[error("bad magic {0:?}, expected \"BOVW\"")]
    BadMagic([u8; 4]),
    #[error("unsupported codebook version {0}")]
    VersionMismatch(u32),
    #[error("truncated codebook: expected {expected} bytes, found {actual}")]
    Truncated { expected: usize, actual: usize },
    #[error("{extra} trailing bytes after codebook payload")]
    TrailingBytes { extra: usize },
    #[error("codebook must have K >= 1 and d >= 1")]
    EmptyCodebook,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CodebookMeta {
    pub source: String,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    centroids: Vec<f32>,
    k: usize,
    dim: usize,
    pub meta: CodebookMeta,
}

impl Codebook {
    pub fn new(k: usize, dim: usize, centroids: Vec<f32>, meta: CodebookMeta) -> Result<Self, BovwError> {
        if k == 0 || dim == 0 {
            return Err(BovwError::EmptyCodebook);
        }
        if centroids.len() != k * dim {
            return Err(BovwError::DimensionMismatch {
                expected: k * dim,
                found: centroids.len(),
            });
        }
        if let Some(i) = centroids.iter().position(|v| !v.is_finite()) {
            return Err(BovwError::NonFinite(i / dim));
        }
        Ok(Self { centroids, k, dim, meta })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn centroid(&self, i: usize) -> &[f32] {
        &self.centroids[i * self.dim..(i + 1) * self.dim]
    }

    /// Index of the closest centroid; ties go to the lowest index.
    pub fn nearest(&self, x: &[f32]) -> usize {
        let mut best = (0, f64::INFINITY);
        for c in 0..self.k {
            let d = sq_dist(self.centroid(c), x);
            if d < best.1 {
                best = (c, d);
            }
        }
        best.0
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(16 + 4 * self.centroids.len());
        out.extend_from_slice(&CODEBOOK_MAGIC);
        out.extend_from_slice(&CODEBOOK_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.k as u32).to_le_bytes());
        out.extend_from_slice(&(self.dim as u32).to_le_bytes());
        for v in &self.centroids {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, BovwError> {
        if bytes.len() < 16 {
            return Err(BovwError::Truncated {
                expected: 16,
                actual: bytes.len(),
            });
        }
        let word = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().expect("4 bytes"));
        let magic: [u8; 4] = bytes[..4].try_into().expect("4 bytes");
        if magic != CODEBOOK_MAGIC {
            return Err(BovwError::BadMagic(magic));
        }
        if word(4) != CODEBOOK_VERSION {
            return Err(BovwError::VersionMismatch(word(4)));
        }
        let (k, dim) = (word(8) as usize, word(12) as usize);
        let expected = 16 + 4 * k * dim;
        if bytes.len() < expected {
            return Err(BovwError::Truncated {
                expected,
                actual: bytes.len(),
            });
        }
        if bytes.len() > expected {
            return Err(BovwError::TrailingBytes {
                extra: bytes.len() - expected,
            });
        }
        let centroids = bytes[16..]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
            .collect();
        Self::new(k, dim, centroids, CodebookMeta::default())
    }
}

fn sq_dist(a: &[f32], b: &[f32]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| {
            let d = f64::from(x) - f64::from(y);
            d * d
        })
        .sum()
}

fn check_rows(rows: &[Vec<f32>], dim: usize) -> Result<(), BovwError> {
    for (i, r) in rows.iter().enumerate() {
        if r.len() != dim {
            return Err(BovwError::DimensionMismatch {
                expected: dim,
                found: r.len(),
            });
        }
        if r.iter().any(|v| !v.is_finite()) {
            return Err(BovwError::NonFinite(i));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KmeansParams {
    pub k: usize,
    pub seed: u64,
    pub max_iters: usize,
    /// Stop once no centroid moves farther than this (Euclidean).
    pub tol: f64,
}

impl Default for KmeansParams {
    fn default() -> Self {
        Self {
            k: DEFAULT_K,
            seed: crate::DEFAULT_SEED,
            max_iters: 100,
            tol: 1e-6,
        }
    }
}

/// k-means++ seeding followed by Lloyd iterations. Clusters that lose all
/// members are re-seeded with the point farthest from its centroid.
pub fn kmeans_fit(descriptors: &[Vec<f32>], params: &KmeansParams) -> Result<Codebook, BovwError> {
    let (n, k) = (descriptors.len(), params.k);
    if k == 0 {
        return Err(BovwError::ZeroK);
    }
    if n < k {
        return Err(BovwError::TooFewDescriptors { n, k });
    }
    let dim = descriptors[0].len();
    if dim == 0 {
        return Err(BovwError::EmptyCodebook);
    }
    check_rows(descriptors, dim)?;
    let pts: Vec<Vec<f64>> = descriptors.iter().map(|r| r.iter().map(|&v| f64::from(v)).collect()).collect();
    let dist2 = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>();

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut centers: Vec<Vec<f64>> = vec![pts[rng.gen_range(0..n)].clone()];
    let mut closest: Vec<f64> = pts.iter().map(|p| dist2(p, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = closest.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.gen::<f64>() * total;
            let mut acc = 0.0;
            let mut chosen = None;
            for (i, &d) in closest.iter().enumerate() {
                if d > 0.0 {
                    acc += d;
                    chosen = Some(i);
                    if acc > target {
                        break;
                    }
                }
            }
            chosen.expect("positive total has a positive entry")
        } else {
            // every point already coincides with a center
            rng.gen_range(0..n)
        };
        centers.push(pts[pick].clone());
        for (c, p) in closest.iter_mut().zip(&pts) {
            *c = c.min(dist2(p, &pts[pick]));
        }
    }

    let nearest = |centers: &[Vec<f64>], p: &[f64]| -> (usize, f64) {
        let mut best = (0, f64::INFINITY);
        for (c, ctr) in centers.iter().enumerate() {
            let d = dist2(p, ctr);
            if d < best.1 {
                best = (c, d);
            }
        }
        best
    };

    for _ in 0..params.max_iters {
        let assign: Vec<(usize, f64)> = pts.par_iter().map(|p| nearest(&centers, p)).collect();
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &(c, _)) in pts.iter().zip(&assign) {
            counts[c] += 1;
            for (s, v) in sums[c].iter_mut().zip(p) {
                *s += v;
            }
        }
        let mut taken = vec![false; n];
        let mut moved: f64 = 0.0;
        for c in 0..k {
            let next = if counts[c] > 0 {
                sums[c].iter().map(|s| s / counts[c] as f64).collect()
            } else {
                let far = (0..n)
                    .filter(|&i| !taken[i])
                    .max_by(|&a, &b| assign[a].1.total_cmp(&assign[b].1).then(b.cmp(&a)))
                    .expect("n >= k leaves a candidate");
                taken[far] = true;
                pts[far].clone()
            };
            moved = moved.max(dist2(&next, &centers[c]).sqrt());
            centers[c] = next;
        }
        if moved < params.tol {
            break;
        }
    }

    let flat = centers.iter().flatten().map(|&v| v as f32).collect();
    Codebook::new(
        k,
        dim,
        flat,
        CodebookMeta {
            source: "kmeans".into(),
            seed: Some(params.seed),
        },
    )
}

/// Per-centroid vote counts.
pub fn bovw_counts(descriptors: &[Vec<f32>], codebook: &Codebook) -> Result<Vec<u64>, BovwError> {
    check_rows(descriptors, codebook.dim)?;
    let votes: Vec<usize> = descriptors.par_iter().map(|d| codebook.nearest(d)).collect();
    let mut counts = vec![0u64; codebook.k];
    for v in votes {
        counts[v] += 1;
    }
    Ok(counts)
}

/// L2-normalized vote histogram; all zeros when there are no descriptors.
pub fn encode_bovw(descriptors: &[Vec<f32>], codebook: &Codebook) -> Result<Vec<f64>, BovwError> {
    let counts = bovw_counts(descriptors, codebook)?;
    let norm = counts.iter().map(|&c| (c * c) as f64).sum::<f64>().sqrt();
    Ok(counts
        .iter()
        .map(|&c| if norm > 0.0 { c as f64 / norm } else { 0.0 })
        .collect())
}
