//! Cross-view and cross-subject protocols, per-protocol pipeline runs, and
//! accuracy reports.

mod report;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bovw::{encode_bovw, BovwError, Codebook};
use crate::classify::{fuse_features, svm_predict, svm_train, ClassifyError, FusionLayout, LinearModel, SvmParams};
use crate::featstore::{load_feature_file, BlockKind, DatasetManifest, FeatureError, ManifestEntry};
use crate::temporal::{ftp_encode, FtpConfig};

pub use report::{emit_report, parse_report_csv, ReportFormat, ResultsTable};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("{mode} protocols are not defined for {dataset}")]
    Unsupported { dataset: Dataset, mode: Mode },
    #[error("ntu cross_subject needs the training subject list")]
    MissingSubjects,
    #[error("empty {0} split")]
    EmptySplit(&'static str),
    #[error("video {0:?} falls in both train and test splits")]
    Overlap(String),
    #[error("video {video:?} has no {block} features")]
    MissingFeature { video: String, block: BlockKind },
    #[error("video {video:?}: {source}")]
    Feature {
        video: String,
        #[source]
        source: FeatureError,
    },
    #[error("video {video:?}: {source}")]
    Bovw {
        video: String,
        #[source]
        source: BovwError,
    },
    #[error("video {video:?}: {block} is {found}-dimensional, earlier videos had {expected}")]
    InconsistentBlock {
        video: String,
        block: BlockKind,
        expected: usize,
        found: usize,
    },
    #[error("video {video:?}: precomputed {block} file must hold one frame, found {frames}")]
    NotPrecomputed { video: String, block: BlockKind, frames: usize },
    #[error("protocol {protocol}: no blocks to fuse")]
    NoBlocks { protocol: String },
    #[error(transparent)]
    Classify(#[from] ClassifyError),
    #[error("report: {0}")]
    Report(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dataset {
    Uwa,
    Nucla,
    Ntu,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    CrossView,
    CrossSubject,
}

impl fmt::Display for Dataset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Dataset::Uwa => "uwa",
            Dataset::Nucla => "nucla",
            Dataset::Ntu => "ntu",
        })
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::CrossView => "cross_view",
            Mode::CrossSubject => "cross_subject",
        })
    }
}

impl FromStr for Dataset {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "uwa" => Ok(Dataset::Uwa),
            "nucla" => Ok(Dataset::Nucla),
            "ntu" => Ok(Dataset::Ntu),
            _ => Err(format!("unknown dataset {s:?} (expected uwa, nucla or ntu)")),
        }
    }
}

impl FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "cross_view" => Ok(Mode::CrossView),
            "cross_subject" => Ok(Mode::CrossSubject),
            _ => Err(format!("unknown mode {s:?} (expected cross_view or cross_subject)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Select {
    #[default]
    Any,
    Only(BTreeSet<u32>),
    Except(BTreeSet<u32>),
}

impl Select {
    pub fn accepts(&self, id: u32) -> bool {
        match self {
            Select::Any => true,
            Select::Only(s) => s.contains(&id),
            Select::Except(s) => !s.contains(&id),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Filter {
    pub views: Select,
    pub subjects: Select,
}

impl Filter {
    pub fn accepts(&self, view: u32, subject: u32) -> bool {
        self.views.accepts(view) && self.subjects.accepts(subject)
    }

    fn views(ids: &[u32]) -> Self {
        Self {
            views: Select::Only(ids.iter().copied().collect()),
            subjects: Select::Any,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Protocol {
    pub name: String,
    pub train: Filter,
    pub test: Filter,
    /// Blocks to fuse; `None` uses every block the manifest declares.
    pub blocks: Option<Vec<BlockKind>>,
}

impl Protocol {
    /// Train on `train_views`, test on `test_view`, named `V_{i,j}^k`.
    pub fn cross_view(train_views: &[u32], test_view: u32) -> Self {
        let ids: Vec<String> = train_views.iter().map(u32::to_string).collect();
        Self {
            name: format!("V_{{{}}}^{}", ids.join(","), test_view),
            train: Filter::views(train_views),
            test: Filter::views(&[test_view]),
            blocks: None,
        }
    }
}

fn pairwise_cross_view(views: u32) -> Vec<Protocol> {
    let mut out = Vec::new();
    for a in 1..=views {
        for b in a + 1..=views {
            for t in (1..=views).filter(|&t| t != a && t != b) {
                out.push(Protocol::cross_view(&[a, b], t));
            }
        }
    }
    out
}

pub fn build_protocols(
    dataset: Dataset,
    mode: Mode,
    ntu_train_subjects: Option<&[u32]>,
) -> Result<Vec<Protocol>, EvalError> {
    match (dataset, mode) {
        (Dataset::Uwa, Mode::CrossView) => Ok(pairwise_cross_view(4)),
        (Dataset::Nucla, Mode::CrossView) => Ok(pairwise_cross_view(3)),
        (Dataset::Ntu, Mode::CrossView) => Ok(vec![Protocol::cross_view(&[2, 3], 1)]),
        (Dataset::Ntu, Mode::CrossSubject) => {
            let ids: BTreeSet<u32> = ntu_train_subjects.ok_or(EvalError::MissingSubjects)?.iter().copied().collect();
            if ids.is_empty() {
                return Err(EvalError::MissingSubjects);
            }
            Ok(vec![Protocol {
                name: "cross_subject".into(),
                train: Filter {
                    views: Select::Any,
                    subjects: Select::Only(ids.clone()),
                },
                test: Filter {
                    views: Select::Any,
                    subjects: Select::Except(ids),
                },
                blocks: None,
            }])
        }
        (dataset, mode) => Err(EvalError::Unsupported { dataset, mode }),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub ftp: FtpConfig,
    /// HPM files already hold one FTP descriptor (frames = 1) instead of
    /// per-frame features.
    pub hpm_precomputed: bool,
    pub svm: SvmParams,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            ftp: FtpConfig::default(),
            hpm_precomputed: false,
            svm: SvmParams::default(),
        }
    }
}

/// Encoded (unnormalized) blocks per video id.
pub type EncodedSet = BTreeMap<String, BTreeMap<BlockKind, Vec<f64>>>;

fn encode_block(
    manifest: &DatasetManifest,
    entry: &ManifestEntry,
    block: BlockKind,
    config: &PipelineConfig,
    codebook: Option<&Codebook>,
) -> Result<Vec<f64>, EvalError> {
    let path = manifest.resolve(entry, block).ok_or_else(|| EvalError::MissingFeature {
        video: entry.video_id.clone(),
        block,
    })?;
    let seq = load_feature_file(&path).map_err(|source| EvalError::Feature {
        video: entry.video_id.clone(),
        source,
    })?;
    let single_frame = |seq: &crate::featstore::FeatureSequence| {
        if seq.frames() != 1 {
            return Err(EvalError::NotPrecomputed {
                video: entry.video_id.clone(),
                block,
                frames: seq.frames(),
            });
        }
        Ok(seq.row(0).iter().map(|&v| f64::from(v)).collect())
    };
    match (block.is_hpm(), codebook) {
        (true, _) if config.hpm_precomputed => single_frame(&seq),
        (true, _) => Ok(ftp_encode(&seq, &config.ftp).values),
        (false, Some(cb)) => {
            let rows: Vec<Vec<f32>> = (0..seq.frames()).map(|t| seq.row(t).to_vec()).collect();
            encode_bovw(&rows, cb).map_err(|source| EvalError::Bovw {
                video: entry.video_id.clone(),
                source,
            })
        }
        (false, None) => single_frame(&seq),
    }
}

/// Loads and encodes the given blocks for the selected entries in parallel.
pub fn encode_entries(
    manifest: &DatasetManifest,
    entries: &[&ManifestEntry],
    blocks: &[BlockKind],
    config: &PipelineConfig,
    codebook: Option<&Codebook>,
) -> Result<EncodedSet, EvalError> {
    let encoded: Vec<(String, BTreeMap<BlockKind, Vec<f64>>)> = entries
        .par_iter()
        .map(|e| {
            let blocks = blocks
                .iter()
                .map(|&b| Ok((b, encode_block(manifest, e, b, config, codebook)?)))
                .collect::<Result<BTreeMap<_, _>, EvalError>>()?;
            Ok((e.video_id.clone(), blocks))
        })
        .collect::<Result<_, EvalError>>()?;
    Ok(encoded.into_iter().collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub video_id: String,
    pub truth: String,
    pub predicted: String,
    pub top_decision: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolRun {
    pub protocol: String,
    pub accuracy: f64,
    pub predictions: Vec<PredictionRecord>,
    pub train_count: usize,
}

impl ProtocolRun {
    /// One line per test video: id, true label, predicted label, top score.
    pub fn prediction_log(&self) -> String {
        self.predictions
            .iter()
            .map(|p| format!("{} {} {} {}\n", p.video_id, p.truth, p.predicted, p.top_decision))
            .collect()
    }
}

/// Video ids of each split, checked non-empty and disjoint.
pub fn split_entries<'m>(
    manifest: &'m DatasetManifest,
    protocol: &Protocol,
) -> Result<(Vec<&'m ManifestEntry>, Vec<&'m ManifestEntry>), EvalError> {
    let train: Vec<_> = manifest
        .entries
        .iter()
        .filter(|e| protocol.train.accepts(e.view_id, e.subject_id))
        .collect();
    let test: Vec<_> = manifest
        .entries
        .iter()
        .filter(|e| protocol.test.accepts(e.view_id, e.subject_id))
        .collect();
    if train.is_empty() {
        return Err(EvalError::EmptySplit("train"));
    }
    if test.is_empty() {
        return Err(EvalError::EmptySplit("test"));
    }
    let train_ids: BTreeSet<&str> = train.iter().map(|e| e.video_id.as_str()).collect();
    if let Some(e) = test.iter().find(|e| train_ids.contains(e.video_id.as_str())) {
        return Err(EvalError::Overlap(e.video_id.clone()));
    }
    Ok((train, test))
}

pub fn protocol_blocks(manifest: &DatasetManifest, protocol: &Protocol) -> Result<Vec<BlockKind>, EvalError> {
    let mut blocks = protocol.blocks.clone().unwrap_or_else(|| manifest.blocks.clone());
    blocks.sort();
    blocks.dedup();
    if blocks.is_empty() {
        return Err(EvalError::NoBlocks {
            protocol: protocol.name.clone(),
        });
    }
    Ok(blocks)
}

fn fused_vector(
    entry: &ManifestEntry,
    encoded: &EncodedSet,
    layout: &FusionLayout,
) -> Result<Vec<f64>, EvalError> {
    let all = encoded.get(&entry.video_id);
    let mut blocks = BTreeMap::new();
    for &(b, expected) in &layout.blocks {
        let v = all.and_then(|m| m.get(&b)).ok_or_else(|| EvalError::MissingFeature {
            video: entry.video_id.clone(),
            block: b,
        })?;
        if v.len() != expected {
            return Err(EvalError::InconsistentBlock {
                video: entry.video_id.clone(),
                block: b,
                expected,
                found: v.len(),
            });
        }
        blocks.insert(b, v.clone());
    }
    Ok(fuse_features(&blocks, layout)?.fused)
}

/// Trains a one-vs-rest model on `train`. The fusion layout comes from the
/// first video; classes absent from the split are left out of the model.
pub fn fit_model(
    manifest: &DatasetManifest,
    train: &[&ManifestEntry],
    blocks: &[BlockKind],
    encoded: &EncodedSet,
    svm: &SvmParams,
) -> Result<LinearModel, EvalError> {
    let first = train.first().ok_or(EvalError::EmptySplit("train"))?;
    let dims = blocks
        .iter()
        .map(|&b| {
            let v = encoded.get(&first.video_id).and_then(|m| m.get(&b)).ok_or_else(|| EvalError::MissingFeature {
                video: first.video_id.clone(),
                block: b,
            })?;
            Ok((b, v.len()))
        })
        .collect::<Result<Vec<_>, EvalError>>()?;
    let layout = FusionLayout::new(dims)?;
    let x = train
        .iter()
        .map(|e| fused_vector(e, encoded, &layout))
        .collect::<Result<Vec<_>, _>>()?;
    let labels: Vec<usize> = train
        .iter()
        .map(|e| manifest.label_index(&e.label).expect("validated label"))
        .collect();
    let present: BTreeSet<usize> = labels.iter().copied().collect();
    let classes: Vec<String> = present.iter().map(|&l| manifest.labels[l].clone()).collect();
    let remap: BTreeMap<usize, usize> = present.iter().enumerate().map(|(i, &l)| (l, i)).collect();
    let y: Vec<usize> = labels.iter().map(|l| remap[l]).collect();
    let mut model = svm_train(&x, &y, &classes, svm)?;
    model.layout = Some(layout);
    Ok(model)
}

/// Predicts every entry of `test` and scores against its label.
pub fn evaluate_model(
    model: &LinearModel,
    test: &[&ManifestEntry],
    encoded: &EncodedSet,
    name: &str,
) -> Result<ProtocolRun, EvalError> {
    if test.is_empty() {
        return Err(EvalError::EmptySplit("test"));
    }
    let layout = model
        .layout
        .as_ref()
        .ok_or_else(|| ClassifyError::Format("model has no fusion layout".into()))?;
    let mut predictions = Vec::with_capacity(test.len());
    let mut correct = 0;
    for e in test {
        let p = svm_predict(model, &fused_vector(e, encoded, layout)?)?;
        if p.label == e.label {
            correct += 1;
        }
        predictions.push(PredictionRecord {
            video_id: e.video_id.clone(),
            truth: e.label.clone(),
            predicted: p.label.clone(),
            top_decision: p.top_decision(),
        });
    }
    Ok(ProtocolRun {
        protocol: name.to_string(),
        accuracy: 100.0 * correct as f64 / test.len() as f64,
        predictions,
        train_count: 0,
    })
}

/// Runs one protocol against already-encoded features.
pub fn run_protocol_encoded(
    manifest: &DatasetManifest,
    protocol: &Protocol,
    encoded: &EncodedSet,
    svm: &SvmParams,
) -> Result<ProtocolRun, EvalError> {
    let (train, test) = split_entries(manifest, protocol)?;
    let blocks = protocol_blocks(manifest, protocol)?;
    let model = fit_model(manifest, &train, &blocks, encoded, svm)?;
    let mut run = evaluate_model(&model, &test, encoded, &protocol.name)?;
    run.train_count = train.len();
    Ok(run)
}

/// Loads, encodes, trains and tests one protocol.
pub fn run_protocol(
    manifest: &DatasetManifest,
    protocol: &Protocol,
    config: &PipelineConfig,
    codebook: Option<&Codebook>,
) -> Result<ProtocolRun, EvalError> {
    let (train, test) = split_entries(manifest, protocol)?;
    let blocks = protocol_blocks(manifest, protocol)?;
    let entries: Vec<_> = train.into_iter().chain(test).collect();
    let encoded = encode_entries(manifest, &entries, &blocks, config, codebook)?;
    run_protocol_encoded(manifest, protocol, &encoded, &config.svm)
}

/// Runs every protocol, encoding each video once.
pub fn run_protocols(
    manifest: &DatasetManifest,
    protocols: &[Protocol],
    config: &PipelineConfig,
    codebook: Option<&Codebook>,
) -> Result<Vec<ProtocolRun>, EvalError> {
    let mut needed: BTreeMap<&str, &ManifestEntry> = BTreeMap::new();
    let mut blocks = BTreeSet::new();
    for p in protocols {
        let (train, test) = split_entries(manifest, p)?;
        for e in train.into_iter().chain(test) {
            needed.insert(&e.video_id, e);
        }
        blocks.extend(protocol_blocks(manifest, p)?);
    }
    let entries: Vec<_> = needed.into_values().collect();
    let blocks: Vec<_> = blocks.into_iter().collect();
    let encoded = encode_entries(manifest, &entries, &blocks, config, codebook)?;
    protocols
        .par_iter()
        .map(|p| run_protocol_encoded(manifest, p, &encoded, &config.svm))
        .collect()
}

impl ResultsTable {
    pub fn from_runs(method: impl Into<String>, runs: &[ProtocolRun]) -> Self {
        Self {
            method: method.into(),
            entries: runs.iter().map(|r| (r.protocol.clone(), r.accuracy)).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uwa_has_twelve_in_table_order() {
        let p = build_protocols(Dataset::Uwa, Mode::CrossView, None).unwrap();
        let names: Vec<_> = p.iter().map(|p| p.name.as_str()).collect();
        assert_eq!(
            names,
            [
                "V_{1,2}^3", "V_{1,2}^4", "V_{1,3}^2", "V_{1,3}^4", "V_{1,4}^2", "V_{1,4}^3", "V_{2,3}^1", "V_{2,3}^4",
                "V_{2,4}^1", "V_{2,4}^3", "V_{3,4}^1", "V_{3,4}^2"
            ]
        );
        for proto in &p {
            for v in 1..=4 {
                assert!(!(proto.train.accepts(v, 0) && proto.test.accepts(v, 0)));
            }
        }
    }

    #[test]
    fn nucla_and_ntu() {
        let n = build_protocols(Dataset::Nucla, Mode::CrossView, None).unwrap();
        assert_eq!(n.iter().map(|p| p.name.as_str()).collect::<Vec<_>>(), ["V_{1,2}^3", "V_{1,3}^2", "V_{2,3}^1"]);
        let cv = build_protocols(Dataset::Ntu, Mode::CrossView, None).unwrap();
        assert_eq!(cv.len(), 1);
        assert!(cv[0].test.accepts(1, 5) && !cv[0].test.accepts(2, 5) && !cv[0].test.accepts(3, 5));
        assert!(cv[0].train.accepts(2, 1) && cv[0].train.accepts(3, 1) && !cv[0].train.accepts(1, 1));
        let cs = build_protocols(Dataset::Ntu, Mode::CrossSubject, Some(&[1, 2, 4])).unwrap();
        assert_eq!(cs.len(), 1);
        assert!(cs[0].train.accepts(1, 2) && !cs[0].test.accepts(1, 2));
        assert!(cs[0].test.accepts(1, 3) && !cs[0].train.accepts(1, 3));
        assert!(matches!(build_protocols(Dataset::Ntu, Mode::CrossSubject, None), Err(EvalError::MissingSubjects)));
        assert!(matches!(
            build_protocols(Dataset::Uwa, Mode::CrossSubject, None),
            Err(EvalError::Unsupported { .. })
        ));
    }
}
