//! Small synthetic datasets for smoke tests and demos.
//!
//! Each action class oscillates at its own whole number of cycles per clip,
//! so the whole-clip Fourier magnitudes separate classes regardless of phase,
//! clip length or per-view gain.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::fmt::Write as _;
use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::featstore::{write_feature_file, BlockKind, DatasetManifest, FeatureSequence, ManifestEntry};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToyDatasetParams {
    pub classes: usize,
    pub views: u32,
    /// Videos per (class, view) cell.
    pub videos: usize,
    pub subjects: u32,
    pub dim: usize,
    pub min_frames: usize,
    pub max_frames: usize,
    pub noise: f64,
    /// Also emit trajectory descriptor files.
    pub with_traj: bool,
    pub traj_dim: usize,
    pub seed: u64,
}

impl Default for ToyDatasetParams {
    fn default() -> Self {
        Self {
            classes: 3,
            views: 3,
            videos: 10,
            subjects: 5,
            dim: 32,
            min_frames: 24,
            max_frames: 48,
            noise: 0.05,
            with_traj: false,
            traj_dim: 8,
            seed: crate::DEFAULT_SEED,
        }
    }
}

/// Generated files (paths relative to the dataset root) plus the manifest
/// describing them, which is itself included as `manifest.txt`.
#[derive(Debug, Clone)]
pub struct ToyDataset {
    pub manifest: DatasetManifest,
    pub files: Vec<(PathBuf, Vec<u8>)>,
}

pub const MANIFEST_NAME: &str = "manifest.txt";

pub fn class_name(c: usize) -> String {
    format!("action{c:02}")
}

pub fn generate_toy_dataset(params: &ToyDatasetParams) -> ToyDataset {
    assert!(params.classes >= 1 && params.views >= 1 && params.dim >= 1);
    assert!(params.min_frames >= 1 && params.min_frames <= params.max_frames);
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    // fixed per-dimension amplitudes shared by every class
    let amps: Vec<f64> = (0..params.dim).map(|_| rng.gen_range(0.5..1.5)).collect();
    let traj_centers: Vec<Vec<f64>> = (0..params.classes)
        .map(|_| (0..params.traj_dim).map(|_| rng.gen_range(-5.0..5.0)).collect())
        .collect();

    let labels: Vec<String> = (0..params.classes).map(class_name).collect();
    let mut blocks = vec![BlockKind::HpmRgb];
    if params.with_traj {
        blocks.push(BlockKind::Traj);
    }
    let mut entries = Vec::new();
    let mut files = Vec::new();
    for c in 0..params.classes {
        let cycles = (c + 1) as f64;
        for view in 1..=params.views {
            let gain = 0.6 + 0.2 * f64::from(view);
            for i in 0..params.videos {
                let id = format!("{}_v{view}_{i:02}", labels[c]);
                let subject = (i as u32 % params.subjects.max(1)) + 1;
                let frames = rng.gen_range(params.min_frames..=params.max_frames);
                let phase: Vec<f64> = (0..params.dim).map(|_| rng.gen_range(0.0..TAU)).collect();
                let mut data = Vec::with_capacity(frames * params.dim);
                for t in 0..frames {
                    for j in 0..params.dim {
                        let s = amps[j] * (TAU * cycles * t as f64 / frames as f64 + phase[j]).cos();
                        data.push((gain * s + params.noise * rng.gen_range(-1.0..1.0)) as f32);
                    }
                }
                let seq = FeatureSequence::new(id.clone(), frames, params.dim, data).expect("finite toy data");
                let mut paths = BTreeMap::new();
                let hpm = PathBuf::from("hpm_rgb").join(format!("{id}.hpmf"));
                files.push((hpm.clone(), write_feature_file(&seq)));
                paths.insert(BlockKind::HpmRgb, hpm);
                if params.with_traj {
                    let n = rng.gen_range(20..40);
                    let mut tdata = Vec::with_capacity(n * params.traj_dim);
                    for _ in 0..n {
                        for &m in &traj_centers[c] {
                            tdata.push((m + rng.gen_range(-1.0..1.0)) as f32);
                        }
                    }
                    let tseq = FeatureSequence::new(id.clone(), n, params.traj_dim, tdata).expect("finite toy data");
                    let traj = PathBuf::from("traj").join(format!("{id}.hpmf"));
                    files.push((traj.clone(), write_feature_file(&tseq)));
                    paths.insert(BlockKind::Traj, traj);
                }
                entries.push(ManifestEntry {
                    video_id: id,
                    label: labels[c].clone(),
                    view_id: view,
                    subject_id: subject,
                    paths,
                    line: 0,
                });
            }
        }
    }
    let manifest = DatasetManifest {
        labels,
        blocks,
        entries,
        base_dir: PathBuf::from("."),
    };
    files.push((PathBuf::from(MANIFEST_NAME), manifest.to_text().into_bytes()));
    ToyDataset { manifest, files }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToySkeletonParams {
    pub poses: usize,
    pub frames_per_pose: usize,
    pub joints: usize,
    pub jitter: f64,
    pub seed: u64,
}

impl Default for ToySkeletonParams {
    fn default() -> Self {
        Self {
            poses: 3,
            frames_per_pose: 40,
            joints: 5,
            jitter: 0.02,
            seed: crate::DEFAULT_SEED,
        }
    }
}

/// Skeleton CSV whose frames cycle through a few well-separated base poses
/// with small jitter and a drifting global translation.
pub fn toy_skeleton_csv(params: &ToySkeletonParams) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let bases: Vec<Vec<[f64; 3]>> = (0..params.poses)
        .map(|p| {
            (0..params.joints)
                .map(|j| {
                    if j == 0 {
                        [0.0; 3]
                    } else {
                        let angle = TAU * (p as f64 / params.poses as f64) + j as f64;
                        [j as f64 * angle.cos(), j as f64 * angle.sin(), 0.3 * j as f64 * p as f64]
                    }
                })
                .collect()
        })
        .collect();
    let mut out = String::from("# toy motion capture clip\nframe_id,joint_id,x,y,z\n");
    let total = params.poses * params.frames_per_pose;
    for f in 0..total {
        let base = &bases[f % params.poses];
        let drift = [0.01 * f as f64, -0.02 * f as f64, 0.0];
        for (j, joint) in base.iter().enumerate() {
            let mut p = [0.0; 3];
            for a in 0..3 {
                let jit = if j == 0 { 0.0 } else { params.jitter * rng.gen_range(-1.0..1.0) };
                p[a] = joint[a] + drift[a] + jit;
            }
            writeln!(out, "{f},{j},{},{},{}", p[0], p[1], p[2]).expect("write to string");
        }
    }
    out
}
