use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use hpm_core::evalharness::{Dataset, Mode, ReportFormat};
use hpm_core::featstore::BlockKind;

#[derive(Debug, Parser)]
#[command(name = "hpm", version, about = "Pose dictionaries, synthetic scene manifests and cross-view action classification")]
pub struct Cli {
    /// Worker thread cap; results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// TOML file with default parameter values. Flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Learn a pose dictionary from skeleton CSV tables.
    ClusterPoses(ClusterPosesArgs),
    /// Label every frame of a skeleton table with its nearest dictionary pose.
    AssignPoses(AssignPosesArgs),
    /// Sample the render manifest for a pose dictionary.
    GenScenes(GenScenesArgs),
    /// Write the seeded train/validation camera partition.
    SplitCameras(SplitCamerasArgs),
    /// Evaluate refiner or discriminator losses for a JSON array of batches.
    GanLoss(GanLossArgs),
    /// Fourier temporal pyramid encoding of per-frame feature files.
    EncodeFtp(EncodeFtpArgs),
    /// Fit a k-means codebook on trajectory descriptors.
    FitCodebook(FitCodebookArgs),
    /// Encode trajectory descriptors as bag-of-words histograms.
    EncodeBovw(EncodeBovwArgs),
    /// Train a one-vs-rest linear SVM on a manifest subset.
    TrainSvm(TrainSvmArgs),
    /// Predict manifest entries with a trained model.
    Predict(PredictArgs),
    /// Run every cross-view or cross-subject protocol of a dataset layout.
    Evaluate(EvaluateArgs),
    /// Merge result tables into one CSV or markdown report.
    Report(ReportArgs),
    /// Write a small separable toy dataset and skeleton table.
    GenToy(GenToyArgs),
}

fn parse_block(s: &str) -> Result<BlockKind, String> {
    s.parse().map_err(|e| format!("{e}"))
}

fn parse_dataset(s: &str) -> Result<Dataset, String> {
    s.parse().map_err(|e| format!("{e}"))
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    s.parse().map_err(|e| format!("{e}"))
}

fn parse_format(s: &str) -> Result<ReportFormat, String> {
    s.parse().map_err(|e| format!("{e}"))
}

#[derive(Debug, Args)]
pub struct ClusterPosesArgs {
    #[arg(long = "in", required = true, num_args = 1..)]
    pub inputs: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub min_cluster_size: Option<usize>,
    #[arg(long)]
    pub min_samples: Option<usize>,
    #[arg(long)]
    pub sample_count: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// same_joint or literal
    #[arg(long)]
    pub metric: Option<String>,
}

#[derive(Debug, Args)]
pub struct AssignPosesArgs {
    #[arg(long)]
    pub dict: PathBuf,
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct GenScenesArgs {
    #[arg(long)]
    pub dict: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub camera_radius: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SplitCamerasArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct GanLossArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

/// Either a single file (`--in`/`--out`) or a whole manifest
/// (`--manifest`/`--out-dir`).
#[derive(Debug, Args)]
pub struct Io {
    #[arg(long = "in", requires = "out", conflicts_with = "manifest")]
    pub input: Option<PathBuf>,
    #[arg(long, requires = "input")]
    pub out: Option<PathBuf>,
    #[arg(long, requires = "out_dir", required_unless_present = "input")]
    pub manifest: Option<PathBuf>,
    #[arg(long, requires = "manifest")]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EncodeFtpArgs {
    #[command(flatten)]
    pub io: Io,
    #[arg(long)]
    pub coefficients: Option<usize>,
    /// Scale every frame to unit length before the transform.
    #[arg(long)]
    pub frame_l2: bool,
}

#[derive(Debug, Args)]
pub struct FitCodebookArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value = "traj", value_parser = parse_block)]
    pub block: BlockKind,
    /// Only use videos from these views.
    #[arg(long, value_delimiter = ',')]
    pub views: Vec<u32>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub max_iters: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EncodeBovwArgs {
    #[arg(long)]
    pub codebook: PathBuf,
    #[command(flatten)]
    pub io: Io,
}

/// How feature blocks are turned into vectors.
#[derive(Debug, Args)]
pub struct EncodingArgs {
    /// HPM files already hold a single encoded frame.
    #[arg(long)]
    pub precomputed: bool,
    #[arg(long)]
    pub coefficients: Option<usize>,
    #[arg(long)]
    pub frame_l2: bool,
    /// Codebook for raw trajectory descriptors.
    #[arg(long)]
    pub codebook: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SvmArgs {
    #[arg(long = "c")]
    pub c: Option<f64>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_epochs: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub no_bias: bool,
}

#[derive(Debug, Args)]
pub struct TrainSvmArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_delimiter = ',')]
    pub train_views: Vec<u32>,
    #[arg(long, value_delimiter = ',')]
    pub train_subjects: Vec<u32>,
    /// Blocks to fuse; defaults to every declared block.
    #[arg(long, value_delimiter = ',', value_parser = parse_block)]
    pub blocks: Vec<BlockKind>,
    #[command(flatten)]
    pub encoding: EncodingArgs,
    #[command(flatten)]
    pub svm: SvmArgs,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub manifest: PathBuf,
    /// Prediction log: id, truth, predicted, top decision value.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_delimiter = ',')]
    pub views: Vec<u32>,
    #[arg(long, value_delimiter = ',')]
    pub subjects: Vec<u32>,
    #[command(flatten)]
    pub encoding: EncodingArgs,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long, value_parser = parse_dataset)]
    pub dataset: Option<Dataset>,
    #[arg(long, value_parser = parse_mode)]
    pub mode: Option<Mode>,
    /// Results table (CSV).
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value = "hpm")]
    pub method: String,
    /// Directory for one prediction log per protocol.
    #[arg(long)]
    pub log_dir: Option<PathBuf>,
    #[command(flatten)]
    pub encoding: EncodingArgs,
    #[command(flatten)]
    pub svm: SvmArgs,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long = "in", required = true, num_args = 1..)]
    pub inputs: Vec<PathBuf>,
    #[arg(long, default_value = "markdown", value_parser = parse_format)]
    pub format: ReportFormat,
    /// Defaults to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GenToyArgs {
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = 3)]
    pub classes: usize,
    #[arg(long, default_value_t = 3)]
    pub views: u32,
    #[arg(long, default_value_t = 10)]
    pub videos: usize,
    #[arg(long, default_value_t = 32)]
    pub dim: usize,
    #[arg(long, default_value_t = 0.05)]
    pub noise: f64,
    #[arg(long)]
    pub with_traj: bool,
    #[arg(long)]
    pub seed: Option<u64>,
}
