//! Representative-pose dictionary: sampled mocap frames clustered with
//! HDBSCAN under the skeletal distance, one exemplar per cluster.

pub mod hdbscan;
mod sampling;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::skeleton::{joint_distance, DistanceVariant, SkeletonError, SkeletonFrame};

pub use hdbscan::{ClusterResult, Metric, SkeletalMetric};
pub use sampling::{sample_indices, subsample_frames};

#[derive(Debug, Error, PartialEq)]
pub enum PoseDictError {
    #[error("no frames available for sampling")]
    EmptyInput,
    #[error("neighbor count {k} out of range for {n} points")]
    NeighborCountOutOfRange { k: usize, n: usize },
    #[error("{n} points is fewer than min_cluster_size {min_cluster_size}")]
    TooFewPoints { n: usize, min_cluster_size: usize },
    #[error("invalid cluster parameters: {0}")]
    InvalidParams(String),
    #[error("clustering produced no clusters")]
    NoClusters,
    #[error("pose dictionary is empty")]
    EmptyDictionary,
    #[error(transparent)]
    Skeleton(#[from] SkeletonError),
    #[error("malformed pose dictionary: {0}")]
    Format(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterParams {
    pub min_cluster_size: usize,
    /// Defaults to `min_cluster_size` when absent.
    pub min_samples: Option<usize>,
    pub sample_count: usize,
    pub rng_seed: u64,
    #[serde(default)]
    pub metric: DistanceVariant,
}

impl Default for ClusterParams {
    fn default() -> Self {
        Self {
            min_cluster_size: 20,
            min_samples: None,
            sample_count: 50_000,
            rng_seed: crate::DEFAULT_SEED,
            metric: DistanceVariant::SameJoint,
        }
    }
}

impl ClusterParams {
    pub fn effective_min_samples(&self) -> usize {
        self.min_samples.unwrap_or(self.min_cluster_size)
    }

    pub fn validate(&self) -> Result<(), PoseDictError> {
        if self.min_cluster_size < 2 {
            return Err(PoseDictError::InvalidParams(format!(
                "min_cluster_size must be at least 2, got {}",
                self.min_cluster_size
            )));
        }
        if self.effective_min_samples() == 0 {
            return Err(PoseDictError::InvalidParams("min_samples must be positive".into()));
        }
        if self.sample_count == 0 {
            return Err(PoseDictError::InvalidParams("sample_count must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoseDictionary {
    pub params: ClusterParams,
    /// Index of each representative within the sampled frame set.
    pub source_indices: Vec<usize>,
    pub poses: Vec<SkeletonFrame>,
}

impl PoseDictionary {
    pub fn len(&self) -> usize {
        self.poses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poses.is_empty()
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("dictionary serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, PoseDictError> {
        let dict: Self = serde_json::from_str(text).map_err(|e| PoseDictError::Format(e.to_string()))?;
        if dict.poses.len() != dict.source_indices.len() {
            return Err(PoseDictError::Format(format!(
                "{} poses but {} source indices",
                dict.poses.len(),
                dict.source_indices.len()
            )));
        }
        if let Some(first) = dict.poses.first() {
            let l = first.joint_count();
            if let Some(bad) = dict.poses.iter().find(|p| p.joint_count() != l) {
                return Err(PoseDictError::Skeleton(SkeletonError::JointCountMismatch {
                    left: l,
                    right: bad.joint_count(),
                }));
            }
        }
        Ok(dict)
    }
}

/// Clusters root-centered frames with HDBSCAN under the configured skeletal
/// metric.
pub fn cluster_poses(points: &[SkeletonFrame], params: &ClusterParams) -> Result<ClusterResult, PoseDictError> {
    params.validate()?;
    if let Some(first) = points.first() {
        let l = first.joint_count();
        if let Some(bad) = points.iter().find(|p| p.joint_count() != l) {
            return Err(SkeletonError::JointCountMismatch {
                left: l,
                right: bad.joint_count(),
            }
            .into());
        }
    }
    hdbscan::hdbscan(
        points,
        params.min_cluster_size,
        params.effective_min_samples(),
        &SkeletalMetric(params.metric),
    )
}

/// Picks the member with the highest membership strength in each cluster,
/// lowest point index on ties.
pub fn extract_representatives(
    points: &[SkeletonFrame],
    result: &ClusterResult,
    params: &ClusterParams,
) -> Result<PoseDictionary, PoseDictError> {
    if result.n_clusters() == 0 {
        return Err(PoseDictError::NoClusters);
    }
    let mut best: Vec<Option<(usize, f64)>> = vec![None; result.n_clusters()];
    for (i, (label, &strength)) in result.labels.iter().zip(&result.strengths).enumerate() {
        if let Some(c) = *label {
            match best[c] {
                Some((_, s)) if s >= strength => {}
                _ => best[c] = Some((i, strength)),
            }
        }
    }
    let source_indices: Vec<usize> = best
        .into_iter()
        .map(|b| b.map(|(i, _)| i).ok_or(PoseDictError::NoClusters))
        .collect::<Result<_, _>>()?;
    Ok(PoseDictionary {
        params: params.clone(),
        poses: source_indices.iter().map(|&i| points[i].clone()).collect(),
        source_indices,
    })
}

/// Full dictionary learning: subsample, cluster, extract exemplars.
pub fn learn_dictionary(
    sequences: &[crate::skeleton::SkeletonSequence],
    params: &ClusterParams,
) -> Result<(PoseDictionary, ClusterResult), PoseDictError> {
    let frames = subsample_frames(sequences, params)?;
    let result = cluster_poses(&frames, params)?;
    log::info!(
        "clustered {} frames into {} clusters ({} noise)",
        frames.len(),
        result.n_clusters(),
        result.noise_count()
    );
    let dict = extract_representatives(&frames, &result, params)?;
    Ok((dict, result))
}

/// Nearest dictionary pose under the same-joint skeletal distance; the lowest
/// pose id wins ties.
pub fn nearest_pose(frame: &SkeletonFrame, dict: &PoseDictionary) -> Result<(usize, f64), PoseDictError> {
    let mut best: Option<(usize, f64)> = None;
    for (id, pose) in dict.poses.iter().enumerate() {
        if pose.joint_count() != frame.joint_count() {
            return Err(SkeletonError::JointCountMismatch {
                left: frame.joint_count(),
                right: pose.joint_count(),
            }
            .into());
        }
        let d = joint_distance(&frame.joints, &pose.joints, DistanceVariant::SameJoint);
        if best.is_none_or(|(_, b)| d < b) {
            best = Some((id, d));
        }
    }
    best.ok_or(PoseDictError::EmptyDictionary)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(x: f64) -> SkeletonFrame {
        SkeletonFrame::new(0, vec![[x, 0.0, 0.0]])
    }

    fn dict(xs: &[f64]) -> PoseDictionary {
        PoseDictionary {
            params: ClusterParams::default(),
            source_indices: (0..xs.len()).collect(),
            poses: xs.iter().map(|&x| f(x)).collect(),
        }
    }

    #[test]
    fn nearest_pose_examples() {
        let d = dict(&[10.0, 20.0, 30.0, 40.0, 50.0, 60.0, 70.0]);
        assert_eq!(nearest_pose(&f(60.0), &d).unwrap(), (5, 0.0));

        let ab = dict(&[3.0, -1.0]);
        assert_eq!(nearest_pose(&f(0.0), &ab).unwrap(), (1, 1.0));

        // poses 2 and 7 are both at distance 1
        let tie = dict(&[9.0, 9.0, 1.0, 9.0, 9.0, 9.0, 9.0, -1.0]);
        assert_eq!(nearest_pose(&f(0.0), &tie).unwrap().0, 2);

        let two_joint = SkeletonFrame::new(0, vec![[0.0; 3], [0.0; 3]]);
        assert!(nearest_pose(&two_joint, &d).is_err());
        assert_eq!(nearest_pose(&f(0.0), &dict(&[])), Err(PoseDictError::EmptyDictionary));
    }

    #[test]
    fn representative_tie_breaks() {
        let points: Vec<_> = (0..3).map(|i| f(i as f64)).collect();
        let result = ClusterResult {
            labels: vec![Some(0); 3],
            strengths: vec![0.2, 0.9, 0.9],
            stabilities: vec![1.0],
        };
        let d = extract_representatives(&points, &result, &ClusterParams::default()).unwrap();
        assert_eq!(d.source_indices, vec![1]);

        let same = ClusterResult {
            labels: vec![Some(0); 3],
            strengths: vec![1.0; 3],
            stabilities: vec![1.0],
        };
        let d = extract_representatives(&points, &same, &ClusterParams::default()).unwrap();
        assert_eq!(d.source_indices, vec![0]);

        let none = ClusterResult {
            labels: vec![None; 3],
            strengths: vec![0.0; 3],
            stabilities: vec![],
        };
        assert_eq!(
            extract_representatives(&points, &none, &ClusterParams::default()),
            Err(PoseDictError::NoClusters)
        );
    }

    #[test]
    fn dictionary_round_trip_is_bit_exact() {
        let mut d = dict(&[0.1, 1e-300, -3.141592653589793, 1.0 / 3.0]);
        d.poses[1].joints[0][2] = f64::MIN_POSITIVE;
        d.params.min_samples = Some(7);
        let text = d.to_json();
        let back = PoseDictionary::from_json(&text).unwrap();
        assert_eq!(back, d);
        assert_eq!(back.to_json(), text);
        for (a, b) in back.poses.iter().zip(&d.poses) {
            for (p, q) in a.joints.iter().zip(&b.joints) {
                for k in 0..3 {
                    assert_eq!(p[k].to_bits(), q[k].to_bits());
                }
            }
        }
    }

    #[test]
    fn malformed_dictionary_is_rejected() {
        assert!(PoseDictionary::from_json("{").is_err());
        let mut d = dict(&[1.0, 2.0]);
        d.source_indices.pop();
        assert!(PoseDictionary::from_json(&d.to_json()).is_err());
    }

    #[test]
    fn invalid_params() {
        let p = ClusterParams {
            min_cluster_size: 1,
            ..ClusterParams::default()
        };
        assert!(p.validate().is_err());
        let p = ClusterParams {
            min_samples: Some(0),
            ..ClusterParams::default()
        };
        assert!(p.validate().is_err());
    }
}
