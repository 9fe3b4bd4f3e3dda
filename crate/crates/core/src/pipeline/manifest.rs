//! Append-only JSON-lines manifest. Each line is a full [`AssetRecord`]; the
//! last line for an asset id wins.

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::{PipelineError, Stage};
use crate::assess::FilterDecision;
use crate::caption::RewardBreakdown;
use crate::geometry::NormalizationReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ingested,
    CoarseRendered,
    Scored,
    Rejected,
    FineRendered,
    CaptionScored,
    Failed,
}

impl Status {
    fn rank(self) -> u8 {
        match self {
            Status::Ingested => 0,
            Status::CoarseRendered => 1,
            Status::Scored | Status::Rejected => 2,
            Status::FineRendered => 3,
            Status::CaptionScored => 4,
            Status::Failed => 5,
        }
    }

    pub fn is_terminal(self) -> bool {
        matches!(self, Status::Rejected | Status::Failed | Status::CaptionScored)
    }

    /// Whether a record may move from `self` to `next`.
    pub fn can_become(self, next: Status) -> bool {
        if self == next {
            return true;
        }
        match self {
            Status::Rejected | Status::Failed => false,
            _ => next == Status::Failed || next.rank() > self.rank(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Status::Ingested => "ingested",
            Status::CoarseRendered => "coarse_rendered",
            Status::Scored => "scored",
            Status::Rejected => "rejected",
            Status::FineRendered => "fine_rendered",
            Status::CaptionScored => "caption_scored",
            Status::Failed => "failed",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub aesthetic: f64,
    pub quality: f64,
    pub scorer_id: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardSummary {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub pattern_matches: usize,
    pub pattern_metric: f64,
    pub reward: f64,
}

impl From<&RewardBreakdown> for RewardSummary {
    fn from(r: &RewardBreakdown) -> Self {
        RewardSummary {
            precision: r.precision,
            recall: r.recall,
            f1: r.f1,
            pattern_matches: r.pattern_matches,
            pattern_metric: r.pattern_metric,
            reward: r.reward,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssetRecord {
    pub asset_id: String,
    pub source_path: PathBuf,
    /// Every path seen with identical content, including `source_path`.
    #[serde(default)]
    pub source_paths: Vec<PathBuf>,
    pub status: Status,
    #[serde(default)]
    pub triangles: usize,
    #[serde(default)]
    pub normalization: Option<NormalizationReport>,
    #[serde(default)]
    pub rig_seed: Option<u64>,
    #[serde(default)]
    pub radius: Option<f64>,
    #[serde(default)]
    pub coarse_dir: Option<PathBuf>,
    #[serde(default)]
    pub fine_dir: Option<PathBuf>,
    #[serde(default)]
    pub scores: Option<Scores>,
    #[serde(default)]
    pub decision: Option<FilterDecision>,
    #[serde(default)]
    pub reward: Option<RewardSummary>,
    /// Wall-clock milliseconds keyed by stage name.
    #[serde(default)]
    pub timings: BTreeMap<String, f64>,
    #[serde(default)]
    pub failed_stage: Option<Stage>,
    #[serde(default)]
    pub error: Option<String>,
}

impl AssetRecord {
    pub fn new(asset_id: String, source_path: PathBuf) -> AssetRecord {
        AssetRecord {
            asset_id,
            source_paths: vec![source_path.clone()],
            source_path,
            status: Status::Ingested,
            triangles: 0,
            normalization: None,
            rig_seed: None,
            radius: None,
            coarse_dir: None,
            fine_dir: None,
            scores: None,
            decision: None,
            reward: None,
            timings: BTreeMap::new(),
            failed_stage: None,
            error: None,
        }
    }

    pub fn failed(mut self, stage: Stage, error: impl Into<String>) -> AssetRecord {
        self.status = Status::Failed;
        self.failed_stage = Some(stage);
        self.error = Some(error.into());
        self
    }
}

struct Inner {
    records: BTreeMap<String, AssetRecord>,
    file: File,
}

pub struct Manifest {
    path: PathBuf,
    inner: Mutex<Inner>,
}

/// Returns the records and, when the final line is torn, the byte length of
/// the intact prefix.
fn replay(path: &Path, text: &str) -> Result<(BTreeMap<String, AssetRecord>, Option<usize>), PipelineError> {
    let mut records = BTreeMap::new();
    let mut torn = None;
    let lines: Vec<&str> = text.split('\n').collect();
    for (i, line) in lines.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<AssetRecord>(line) {
            Ok(r) => {
                records.insert(r.asset_id.clone(), r);
            }
            // an unterminated final line is a write interrupted by a crash
            Err(_) if i + 1 == lines.len() => {
                log::warn!("{}: dropping truncated final line", path.display());
                torn = Some(text.len() - line.len());
            }
            Err(e) => {
                return Err(PipelineError::Manifest(format!("{}:{}: {e}", path.display(), i + 1)));
            }
        }
    }
    Ok((records, torn))
}

impl Manifest {
    /// Opens or creates the manifest at `path` and replays it.
    pub fn open(path: &Path) -> Result<Manifest, PipelineError> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|e| PipelineError::io(dir, e))?;
        }
        let text = match std::fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => String::new(),
            Err(e) => return Err(PipelineError::io(path, e)),
        };
        let (records, torn) = replay(path, &text)?;
        let mut file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| PipelineError::io(path, e))?;
        if let Some(len) = torn {
            file.set_len(len as u64).map_err(|e| PipelineError::io(path, e))?;
        } else if !text.is_empty() && !text.ends_with('\n') {
            file.write_all(b"\n").map_err(|e| PipelineError::io(path, e))?;
        }
        Ok(Manifest {
            path: path.to_path_buf(),
            inner: Mutex::new(Inner { records, file }),
        })
    }

    /// Opens an existing manifest; a missing file is an error.
    pub fn open_existing(path: &Path) -> Result<Manifest, PipelineError> {
        if !path.is_file() {
            return Err(PipelineError::Config(format!("manifest {} does not exist", path.display())));
        }
        Manifest::open(path)
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    fn lock(&self) -> std::sync::MutexGuard<'_, Inner> {
        self.inner.lock().unwrap_or_else(|e| e.into_inner())
    }

    pub fn get(&self, asset_id: &str) -> Option<AssetRecord> {
        self.lock().records.get(asset_id).cloned()
    }

    /// Current records ordered by asset id.
    pub fn records(&self) -> Vec<AssetRecord> {
        self.lock().records.values().cloned().collect()
    }

    pub fn with_status(&self, status: Status) -> Vec<AssetRecord> {
        self.lock().records.values().filter(|r| r.status == status).cloned().collect()
    }

    /// Appends `record` as one line and flushes it before returning.
    pub fn append(&self, record: &AssetRecord) -> Result<(), PipelineError> {
        let mut inner = self.lock();
        if let Some(prev) = inner.records.get(&record.asset_id) {
            if !prev.status.can_become(record.status) {
                return Err(PipelineError::Manifest(format!(
                    "{}: illegal transition {} -> {}",
                    record.asset_id,
                    prev.status.name(),
                    record.status.name()
                )));
            }
        }
        let mut line = serde_json::to_string(record).map_err(|e| PipelineError::Manifest(e.to_string()))?;
        line.push('\n');
        inner
            .file
            .write_all(line.as_bytes())
            .and_then(|_| inner.file.flush())
            .map_err(|e| PipelineError::io(&self.path, e))?;
        inner.records.insert(record.asset_id.clone(), record.clone());
        Ok(())
    }

    /// Rewrites the file with only the current record per asset.
    pub fn compact(&self) -> Result<usize, PipelineError> {
        let mut inner = self.lock();
        let mut text = String::new();
        for r in inner.records.values() {
            text.push_str(&serde_json::to_string(r).map_err(|e| PipelineError::Manifest(e.to_string()))?);
            text.push('\n');
        }
        let tmp = self.path.with_extension("compact.tmp");
        std::fs::write(&tmp, &text).map_err(|e| PipelineError::io(&tmp, e))?;
        std::fs::rename(&tmp, &self.path).map_err(|e| PipelineError::io(&self.path, e))?;
        inner.file = OpenOptions::new()
            .append(true)
            .open(&self.path)
            .map_err(|e| PipelineError::io(&self.path, e))?;
        Ok(inner.records.len())
    }

    pub fn count(&self, status: Status) -> usize {
        self.lock().records.values().filter(|r| r.status == status).count()
    }
}
