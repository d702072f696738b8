//! Line-oriented dataset manifest.
//!
//! ```text
//! # comments and blank lines are ignored
//! @labels walk,run,jump
//! @blocks hpm_rgb,traj
//! video_id,action_label,view_id,subject_id,hpm_rgb,traj
//! a01_v1_s1,walk,1,1,feat/a01_v1_s1.hpmf,traj/a01_v1_s1.hpmf
//! ```
//!
//! Columns may appear in any order; every declared block needs a column. An
//! empty path cell means the block is absent for that video. Relative paths
//! resolve against the manifest's directory.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockKind {
    HpmRgb,
    Hpm3d,
    Traj,
}

impl BlockKind {
    pub const ALL: [BlockKind; 3] = [BlockKind::HpmRgb, BlockKind::Hpm3d, BlockKind::Traj];

    pub fn name(self) -> &'static str {
        match self {
            BlockKind::HpmRgb => "hpm_rgb",
            BlockKind::Hpm3d => "hpm_3d",
            BlockKind::Traj => "traj",
        }
    }

    /// HPM blocks carry per-frame CNN features and go through FTP; the
    /// trajectory block carries local descriptors for BoVW.
    pub fn is_hpm(self) -> bool {
        !matches!(self, BlockKind::Traj)
    }
}

impl fmt::Display for BlockKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BlockKind {
    type Err = ManifestError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|b| b.name() == s)
            .ok_or_else(|| ManifestError::UnknownBlock(s.to_string()))
    }
}

#[derive(Debug, Error)]
pub enum ManifestError {
    #[error("missing @{0} directive")]
    MissingDirective(&'static str),
    #[error("line {line}: @{name} declared twice")]
    RepeatedDirective { line: usize, name: String },
    #[error("line {line}: unknown directive @{name}")]
    UnknownDirective { line: usize, name: String },
    #[error("unknown block {0:?}")]
    UnknownBlock(String),
    #[error("label set is empty")]
    EmptyLabels,
    #[error("label {0:?} declared twice")]
    DuplicateLabel(String),
    #[error("missing column header")]
    MissingHeader,
    #[error("missing mandatory column {0:?}")]
    MissingColumn(String),
    #[error("line {line}: expected {expected} fields, found {found}")]
    FieldCount { line: usize, expected: usize, found: usize },
    #[error("line {line}: invalid {field} {value:?}")]
    InvalidField { line: usize, field: &'static str, value: String },
    #[error("line {line}: duplicate video_id {id:?}")]
    DuplicateId { line: usize, id: String },
    #[error("line {line}: unknown label {label:?}")]
    UnknownLabel { line: usize, label: String },
    #[error("video {id:?}: {block} file {path} does not exist")]
    MissingFile { id: String, block: BlockKind, path: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub video_id: String,
    pub label: String,
    pub view_id: u32,
    pub subject_id: u32,
    pub paths: BTreeMap<BlockKind, PathBuf>,
    /// 1-based source line, kept for diagnostics.
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetManifest {
    pub labels: Vec<String>,
    pub blocks: Vec<BlockKind>,
    pub entries: Vec<ManifestEntry>,
    /// Directory that relative paths resolve against.
    pub base_dir: PathBuf,
}

const ID_COL: &str = "video_id";
const LABEL_COL: &str = "action_label";
const VIEW_COL: &str = "view_id";
const SUBJECT_COL: &str = "subject_id";

fn split_list(s: &str) -> Vec<String> {
    s.split(',').map(str::trim).filter(|x| !x.is_empty()).map(String::from).collect()
}

pub fn parse_dataset_manifest(text: &str) -> Result<DatasetManifest, ManifestError> {
    let mut labels: Option<Vec<String>> = None;
    let mut blocks: Option<Vec<BlockKind>> = None;
    let mut columns: Option<BTreeMap<String, usize>> = None;
    let mut width = 0;
    let mut entries = Vec::new();
    let mut seen = HashSet::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        if let Some(rest) = trimmed.strip_prefix('@') {
            let (name, value) = rest.split_once(char::is_whitespace).unwrap_or((rest, ""));
            let repeated = || ManifestError::RepeatedDirective {
                line,
                name: name.to_string(),
            };
            match name {
                "labels" => {
                    if labels.is_some() {
                        return Err(repeated());
                    }
                    let list = split_list(value);
                    let mut uniq = HashSet::new();
                    if let Some(d) = list.iter().find(|l| !uniq.insert(l.as_str())) {
                        return Err(ManifestError::DuplicateLabel(d.clone()));
                    }
                    labels = Some(list);
                }
                "blocks" => {
                    if blocks.is_some() {
                        return Err(repeated());
                    }
                    let mut list = split_list(value)
                        .iter()
                        .map(|b| b.parse())
                        .collect::<Result<Vec<BlockKind>, _>>()?;
                    list.sort();
                    list.dedup();
                    blocks = Some(list);
                }
                _ => {
                    return Err(ManifestError::UnknownDirective {
                        line,
                        name: name.to_string(),
                    })
                }
            }
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').map(str::trim).collect();
        let Some(cols) = &columns else {
            let labels = labels.as_ref().ok_or(ManifestError::MissingDirective("labels"))?;
            if labels.is_empty() {
                return Err(ManifestError::EmptyLabels);
            }
            let blocks = blocks.as_ref().ok_or(ManifestError::MissingDirective("blocks"))?;
            let map: BTreeMap<String, usize> = fields.iter().enumerate().map(|(i, f)| (f.to_string(), i)).collect();
            let required = [ID_COL, LABEL_COL, VIEW_COL, SUBJECT_COL]
                .into_iter()
                .chain(blocks.iter().map(|b| b.name()));
            for col in required {
                if !map.contains_key(col) {
                    return Err(ManifestError::MissingColumn(col.to_string()));
                }
            }
            width = fields.len();
            columns = Some(map);
            continue;
        };
        if fields.len() != width {
            return Err(ManifestError::FieldCount {
                line,
                expected: width,
                found: fields.len(),
            });
        }
        let get = |c: &str| fields[cols[c]];
        let id = get(ID_COL);
        if id.is_empty() {
            return Err(ManifestError::InvalidField {
                line,
                field: "video_id",
                value: String::new(),
            });
        }
        if !seen.insert(id.to_string()) {
            return Err(ManifestError::DuplicateId { line, id: id.to_string() });
        }
        let label = get(LABEL_COL);
        if !labels.as_ref().expect("header follows labels").iter().any(|l| l == label) {
            return Err(ManifestError::UnknownLabel {
                line,
                label: label.to_string(),
            });
        }
        let number = |field: &'static str, col: &str| {
            get(col).parse::<u32>().map_err(|_| ManifestError::InvalidField {
                line,
                field,
                value: get(col).to_string(),
            })
        };
        let view_id = number("view_id", VIEW_COL)?;
        let subject_id = number("subject_id", SUBJECT_COL)?;
        let paths = blocks
            .as_ref()
            .expect("header follows blocks")
            .iter()
            .filter(|b| !get(b.name()).is_empty())
            .map(|&b| (b, PathBuf::from(get(b.name()))))
            .collect();
        entries.push(ManifestEntry {
            video_id: id.to_string(),
            label: label.to_string(),
            view_id,
            subject_id,
            paths,
            line,
        });
    }

    let labels = labels.ok_or(ManifestError::MissingDirective("labels"))?;
    let blocks = blocks.ok_or(ManifestError::MissingDirective("blocks"))?;
    if columns.is_none() {
        return Err(ManifestError::MissingHeader);
    }
    Ok(DatasetManifest {
        labels,
        blocks,
        entries,
        base_dir: PathBuf::from("."),
    })
}

impl DatasetManifest {
    /// Reads, parses and checks that every referenced feature file exists.
    pub fn load(path: &Path) -> Result<Self, ManifestError> {
        let text = std::fs::read_to_string(path).map_err(|source| ManifestError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut m = parse_dataset_manifest(&text)?;
        m.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        m.check_paths()?;
        Ok(m)
    }

    pub fn check_paths(&self) -> Result<(), ManifestError> {
        for e in &self.entries {
            for &b in e.paths.keys() {
                let p = self.resolve(e, b).expect("key present");
                if !p.is_file() {
                    return Err(ManifestError::MissingFile {
                        id: e.video_id.clone(),
                        block: b,
                        path: p.display().to_string(),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn resolve(&self, entry: &ManifestEntry, block: BlockKind) -> Option<PathBuf> {
        entry.paths.get(&block).map(|p| self.base_dir.join(p))
    }

    pub fn label_index(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Renders the manifest back to text with the canonical column order.
    pub fn to_text(&self) -> String {
        let mut out = format!("@labels {}\n@blocks {}\n", self.labels.join(","), {
            self.blocks.iter().map(|b| b.name()).collect::<Vec<_>>().join(",")
        });
        let mut header = vec![ID_COL, LABEL_COL, VIEW_COL, SUBJECT_COL];
        header.extend(self.blocks.iter().map(|b| b.name()));
        out.push_str(&header.join(","));
        out.push('\n');
        for e in &self.entries {
            let mut row = vec![e.video_id.clone(), e.label.clone(), e.view_id.to_string(), e.subject_id.to_string()];
            for b in &self.blocks {
                row.push(e.paths.get(b).map(|p| p.display().to_string()).unwrap_or_default());
            }
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}
