//! Motion-capture skeleton frames and the skeletal pose distance.
//!
//! Skeleton tables are CSV with the header `frame_id,joint_id,x,y,z`. Rows may
//! appear in any order; lines starting with `#` are comments.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Joint = [f64; 3];

#[derive(Debug, Error, PartialEq)]
pub enum SkeletonError {
    #[error("malformed row at row {row}: {reason}")]
    MalformedRow { row: u64, reason: String },
    #[error("non-finite coordinate at row {row}")]
    NonFinite { row: u64 },
    #[error("inconsistent joint count at row {row}: expected {expected}, found {found}")]
    InconsistentJointCount {
        row: u64,
        expected: usize,
        found: usize,
    },
    #[error("duplicate joint {joint_id} in frame {frame_id} at row {row}")]
    DuplicateJoint {
        row: u64,
        frame_id: u64,
        joint_id: u64,
    },
    #[error("joint ids of frame {frame_id} differ from the first frame (row {row})")]
    InconsistentJointIds { row: u64, frame_id: u64 },
    #[error("skeleton table contains no frames")]
    Empty,
    #[error("joint count mismatch: {left} vs {right}")]
    JointCountMismatch { left: usize, right: usize },
    #[error("root index {root} out of range for {joints} joints")]
    RootOutOfRange { root: usize, joints: usize },
}

/// Joint positions of a single motion-capture frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkeletonFrame {
    pub frame_id: u64,
    pub joints: Vec<Joint>,
    pub root_index: usize,
}

impl SkeletonFrame {
    pub fn new(frame_id: u64, joints: Vec<Joint>) -> Self {
        Self {
            frame_id,
            joints,
            root_index: 0,
        }
    }

    pub fn joint_count(&self) -> usize {
        self.joints.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SkeletonSequence {
    pub frames: Vec<SkeletonFrame>,
    pub source_id: String,
}

impl SkeletonSequence {
    pub fn joint_count(&self) -> usize {
        self.frames.first().map_or(0, SkeletonFrame::joint_count)
    }
}

/// Which pairing of joints the skeletal distance compares.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceVariant {
    /// Max over joints of the per-joint L1 difference.
    #[default]
    SameJoint,
    /// Max over all joint pairs `i <= j`, comparing joint `i` of the first
    /// skeleton with joint `j` of the second.
    Literal,
}

/// Parses a skeleton CSV table. Frames are grouped by `frame_id` (ascending)
/// and joints ordered by `joint_id`. Row numbers in errors are 1-based file
/// lines.
pub fn parse_skeleton_table(bytes: &[u8], source_id: &str) -> Result<SkeletonSequence, SkeletonError> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(bytes);

    let header = reader
        .headers()
        .map_err(|e| SkeletonError::MalformedRow {
            row: 1,
            reason: e.to_string(),
        })?
        .clone();
    let expected_header = ["frame_id", "joint_id", "x", "y", "z"];
    if header.len() != 5 || header.iter().zip(expected_header).any(|(a, b)| a != b) {
        return Err(SkeletonError::MalformedRow {
            row: header.position().map_or(1, |p| p.line()),
            reason: format!("expected header {}", expected_header.join(",")),
        });
    }

    // frame_id -> (joint_id -> position, last row seen for the frame)
    let mut frames: BTreeMap<u64, (BTreeMap<u64, Joint>, u64)> = BTreeMap::new();
    for record in reader.records() {
        let record = record.map_err(|e| SkeletonError::MalformedRow {
            row: e.position().map_or(0, |p| p.line()),
            reason: e.to_string(),
        })?;
        let row = record.position().map_or(0, |p| p.line());
        if record.len() != 5 {
            return Err(SkeletonError::MalformedRow {
                row,
                reason: format!("expected 5 fields, found {}", record.len()),
            });
        }
        let parse_id = |s: &str, what: &str| {
            s.parse::<u64>().map_err(|_| SkeletonError::MalformedRow {
                row,
                reason: format!("invalid {what} {s:?}"),
            })
        };
        let frame_id = parse_id(&record[0], "frame_id")?;
        let joint_id = parse_id(&record[1], "joint_id")?;
        let mut joint = [0.0; 3];
        for (slot, field) in joint.iter_mut().zip(record.iter().skip(2)) {
            let v: f64 = field.parse().map_err(|_| SkeletonError::MalformedRow {
                row,
                reason: format!("invalid coordinate {field:?}"),
            })?;
            if !v.is_finite() {
                return Err(SkeletonError::NonFinite { row });
            }
            *slot = v;
        }
        let entry = frames.entry(frame_id).or_default();
        if entry.0.insert(joint_id, joint).is_some() {
            return Err(SkeletonError::DuplicateJoint {
                row,
                frame_id,
                joint_id,
            });
        }
        entry.1 = row;
    }

    let mut iter = frames.into_iter();
    let Some((first_id, (first_joints, _))) = iter.next() else {
        return Err(SkeletonError::Empty);
    };
    let joint_ids: Vec<u64> = first_joints.keys().copied().collect();
    let mut out = vec![SkeletonFrame::new(first_id, first_joints.into_values().collect())];
    for (frame_id, (joints, row)) in iter {
        if joints.len() != joint_ids.len() {
            return Err(SkeletonError::InconsistentJointCount {
                row,
                expected: joint_ids.len(),
                found: joints.len(),
            });
        }
        if !joints.keys().eq(joint_ids.iter()) {
            return Err(SkeletonError::InconsistentJointIds { row, frame_id });
        }
        out.push(SkeletonFrame::new(frame_id, joints.into_values().collect()));
    }

    Ok(SkeletonSequence {
        frames: out,
        source_id: source_id.to_string(),
    })
}

/// Translates every joint so that the root joint sits at the origin.
pub fn center_at_root(frame: &SkeletonFrame) -> Result<SkeletonFrame, SkeletonError> {
    let root = *frame
        .joints
        .get(frame.root_index)
        .ok_or(SkeletonError::RootOutOfRange {
            root: frame.root_index,
            joints: frame.joints.len(),
        })?;
    let joints = frame
        .joints
        .iter()
        .map(|j| [j[0] - root[0], j[1] - root[1], j[2] - root[2]])
        .collect();
    Ok(SkeletonFrame {
        frame_id: frame.frame_id,
        joints,
        root_index: frame.root_index,
    })
}

#[inline]
fn l1(a: &Joint, b: &Joint) -> f64 {
    (a[0] - b[0]).abs() + (a[1] - b[1]).abs() + (a[2] - b[2]).abs()
}

/// Skeletal distance between two frames with equal joint counts.
pub fn skeletal_distance(
    a: &SkeletonFrame,
    b: &SkeletonFrame,
    variant: DistanceVariant,
) -> Result<f64, SkeletonError> {
    if a.joints.len() != b.joints.len() {
        return Err(SkeletonError::JointCountMismatch {
            left: a.joints.len(),
            right: b.joints.len(),
        });
    }
    Ok(joint_distance(&a.joints, &b.joints, variant))
}

/// Unchecked form of [`skeletal_distance`]; callers guarantee equal lengths.
pub(crate) fn joint_distance(a: &[Joint], b: &[Joint], variant: DistanceVariant) -> f64 {
    match variant {
        DistanceVariant::SameJoint => a
            .iter()
            .zip(b)
            .map(|(p, q)| l1(p, q))
            .fold(0.0, f64::max),
        DistanceVariant::Literal => {
            let mut best = 0.0f64;
            for (i, p) in a.iter().enumerate() {
                for q in &b[i..] {
                    best = best.max(l1(p, q));
                }
            }
            best
        }
    }
}
