//! Manifest-driven batch orchestration: ingest, coarse render, filter, fine
//! render and caption scoring, each resumable and run over a worker pool.

mod config;
mod ingest;
mod manifest;
mod savings;
mod stages;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use config::{PipelineConfig, PresetOverrides, Resolution, ScorerSelection, WORKERS_ENV};
pub use ingest::{asset_id_for, ingest, IngestSummary, ASSET_ID_LEN};
pub use manifest::{AssetRecord, Manifest, RewardSummary, Scores, Status};
pub use savings::{compute_savings_report, two_pass_speedup, SavingsReport};
pub use stages::{asset_seed, run_all, run_stage, run_stage_with, StageHooks, StageSummary};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("manifest error: {0}")]
    Manifest(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
}

impl PipelineError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> PipelineError {
        PipelineError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Ingest,
    Coarse,
    Filter,
    Fine,
    Caption,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::Coarse => "coarse",
            Stage::Filter => "filter",
            Stage::Fine => "fine",
            Stage::Caption => "caption",
        }
    }

    /// Status a record must hold to be picked up by this stage.
    pub fn input_status(self) -> Option<Status> {
        match self {
            Stage::Ingest => None,
            Stage::Coarse => Some(Status::Ingested),
            Stage::Filter => Some(Status::CoarseRendered),
            Stage::Fine => Some(Status::Scored),
            Stage::Caption => Some(Status::FineRendered),
        }
    }
}
