//! Human pose model pipeline: pose-dictionary learning from mocap skeletons,
//! synthetic render manifests, refinement-GAN loss kernels, Fourier temporal
//! pyramid encoding, bag-of-visual-words trajectories, and one-vs-rest linear
//! SVM classification over cross-view protocols.

pub mod bovw;
pub mod classify;
pub mod evalharness;
pub mod featstore;
pub mod ganloss;
pub mod posedict;
pub mod scenegen;
pub mod skeleton;
pub mod temporal;
pub mod toydata;

pub use bovw::{Codebook, CodebookMeta, KmeansParams};
pub use classify::{FusedVector, FusionLayout, LinearModel, Prediction, SvmParams};
pub use evalharness::{Dataset, Mode, PipelineConfig, Protocol, ResultsTable};
pub use featstore::{BlockKind, DatasetManifest, FeatureSequence};
pub use ganloss::{DiscOutputs, LossValue, Phase, RefinerBatch};
pub use posedict::{ClusterParams, ClusterResult, PoseDictionary};
pub use scenegen::{CameraPose, RenderManifest, SceneParams, SceneSpec};
pub use skeleton::{DistanceVariant, SkeletonFrame, SkeletonSequence};
pub use temporal::{FtpConfig, FtpDescriptor};

/// Seed used whenever the caller does not supply one.
pub const DEFAULT_SEED: u64 = 0x4850_4d5f_2018;
