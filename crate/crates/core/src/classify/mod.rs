//! Feature fusion and one-vs-rest linear SVM.

mod svm;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use crate::featstore::BlockKind;
pub use svm::{svm_predict, svm_train, train_binary, BinarySolution, LinearModel, Prediction, SvmParams};

#[derive(Debug, Error, PartialEq)]
pub enum ClassifyError {
    #[error("fusion layout has no blocks")]
    EmptyLayout,
    #[error("block {0} listed twice in layout")]
    RepeatedBlock(BlockKind),
    #[error("block {0} is required by the layout but missing")]
    MissingBlock(BlockKind),
    #[error("block {0} is not part of the layout")]
    UnexpectedBlock(BlockKind),
    #[error("block {block} has dimension {found}, layout expects {expected}")]
    BlockDimension { block: BlockKind, expected: usize, found: usize },
    #[error("need at least 2 classes, got {0}")]
    TooFewClasses(usize),
    #[error("class {0:?} has no training examples")]
    EmptyClass(String),
    #[error("label index {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },
    #[error("{features} feature vectors but {labels} labels")]
    LengthMismatch { features: usize, labels: usize },
    #[error("vector dimension {found} does not match model dimension {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("non-finite feature in example {0}")]
    NonFinite(usize),
    #[error("invalid SVM parameter: {0}")]
    InvalidParams(String),
    #[error("model file: {0}")]
    Format(String),
}

/// Which blocks are fused and their expected dimensions. Blocks are always
/// concatenated in `hpm_rgb, hpm_3d, traj` order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FusionLayout {
    pub blocks: Vec<(BlockKind, usize)>,
}

impl FusionLayout {
    pub fn new(mut blocks: Vec<(BlockKind, usize)>) -> Result<Self, ClassifyError> {
        if blocks.is_empty() {
            return Err(ClassifyError::EmptyLayout);
        }
        blocks.sort_by_key(|b| b.0);
        if let Some(w) = blocks.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(ClassifyError::RepeatedBlock(w[0].0));
        }
        Ok(Self { blocks })
    }

    pub fn fused_dim(&self) -> usize {
        self.blocks.iter().map(|b| b.1).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FusedVector {
    /// Normalized blocks in layout order.
    pub blocks: Vec<(BlockKind, Vec<f64>)>,
    pub fused: Vec<f64>,
}

pub fn l2_normalize(v: &[f64]) -> Vec<f64> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > 0.0 {
        v.iter().map(|x| x / n).collect()
    } else {
        v.to_vec()
    }
}

/// Normalizes each block to unit L2 norm (zero blocks stay zero) and
/// concatenates them in layout order.
pub fn fuse_features(
    inputs: &BTreeMap<BlockKind, Vec<f64>>,
    layout: &FusionLayout,
) -> Result<FusedVector, ClassifyError> {
    if let Some(extra) = inputs.keys().find(|k| !layout.blocks.iter().any(|b| b.0 == **k)) {
        return Err(ClassifyError::UnexpectedBlock(*extra));
    }
    let mut blocks = Vec::with_capacity(layout.blocks.len());
    let mut fused = Vec::with_capacity(layout.fused_dim());
    for &(kind, dim) in &layout.blocks {
        let v = inputs.get(&kind).ok_or(ClassifyError::MissingBlock(kind))?;
        if v.len() != dim {
            return Err(ClassifyError::BlockDimension {
                block: kind,
                expected: dim,
                found: v.len(),
            });
        }
        let norm = l2_normalize(v);
        fused.extend_from_slice(&norm);
        blocks.push((kind, norm));
    }
    Ok(FusedVector { blocks, fused })
}
