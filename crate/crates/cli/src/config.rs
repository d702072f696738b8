use std::path::Path;

use anyhow::{bail, Context, Result};
use hpm_core::skeleton::DistanceVariant;
use serde::Deserialize;

const NTU_SPLIT: &str = include_str!("../config/ntu_cross_subject.toml");

/// Defaults read from `--config`. Every key is optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub threads: Option<usize>,
    pub seed: Option<u64>,
    pub min_cluster_size: Option<usize>,
    pub min_samples: Option<usize>,
    pub sample_count: Option<usize>,
    pub metric: Option<String>,
    pub camera_radius: Option<f64>,
    pub coefficients: Option<usize>,
    pub frame_l2: Option<bool>,
    pub precomputed: Option<bool>,
    pub k: Option<usize>,
    pub max_iters: Option<usize>,
    #[serde(rename = "C")]
    pub c: Option<f64>,
    pub tol: Option<f64>,
    pub max_epochs: Option<usize>,
    pub fit_bias: Option<bool>,
    pub lambda: Option<f64>,
    pub epsilon: Option<f64>,
    pub dataset: Option<String>,
    pub mode: Option<String>,
    pub ntu_train_subjects: Option<Vec<u32>>,
}

impl Config {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    pub fn ntu_subjects(&self) -> Result<Vec<u32>> {
        if let Some(s) = &self.ntu_train_subjects {
            return Ok(s.clone());
        }
        #[derive(Deserialize)]
        struct Split {
            train_subjects: Vec<u32>,
        }
        let split: Split = toml::from_str(NTU_SPLIT).context("bundled NTU split")?;
        Ok(split.train_subjects)
    }
}

pub fn parse_metric(s: &str) -> Result<DistanceVariant> {
    match s {
        "same_joint" => Ok(DistanceVariant::SameJoint),
        "literal" => Ok(DistanceVariant::Literal),
        other => bail!("unknown metric {other:?} (expected same_joint or literal)"),
    }
}

/// Flag, then config, then built-in default.
pub fn pick<T>(flag: Option<T>, config: Option<T>, default: T) -> T {
    flag.or(config).unwrap_or(default)
}
