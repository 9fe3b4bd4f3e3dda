//! Scoring through an external model process.
//!
//! One scorer command serves both metrics; it is invoked once per metric with
//! a request naming the metric:
//! `{"images": ["<path>", ...], "metric": "aesthetic"}` and must answer with
//! `{"scores": {"<path>": <float>, ...}}` covering exactly the requested paths.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{AssessError, Metric, ScoreReport, ViewScore};
use crate::process::{ProcessConfig, ProcessRunner};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExternalScorerConfig {
    /// Recorded as `scorer_id` in reports; defaults to the program path.
    #[serde(default)]
    pub id: Option<String>,
    #[serde(flatten)]
    pub process: ProcessConfig,
}

impl ExternalScorerConfig {
    pub fn new(program: impl Into<PathBuf>) -> Self {
        ExternalScorerConfig {
            id: None,
            process: ProcessConfig::new(program),
        }
    }

    pub fn scorer_id(&self) -> String {
        self.id
            .clone()
            .unwrap_or_else(|| format!("cmd:{}", self.process.program.display()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRequest {
    pub images: Vec<String>,
    pub metric: Metric,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreResponse {
    pub scores: BTreeMap<String, f64>,
}

/// A configured scorer with its own in-flight limit, shareable across workers.
pub struct ExternalScorer {
    id: String,
    runner: ProcessRunner,
}

impl ExternalScorer {
    pub fn new(config: ExternalScorerConfig) -> Self {
        ExternalScorer {
            id: config.scorer_id(),
            runner: ProcessRunner::new(config.process),
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    fn score_metric(&self, images: &[String], metric: Metric) -> Result<Vec<f64>, AssessError> {
        let request = ScoreRequest {
            images: images.to_vec(),
            metric,
        };
        let response: ScoreResponse = self.runner.call(&request)?;
        if let Some(extra) = response.scores.keys().find(|k| !images.contains(k)) {
            return Err(AssessError::ScorerProtocolError(format!("unrequested path {extra:?}")));
        }
        images
            .iter()
            .map(|p| match response.scores.get(p) {
                None => Err(AssessError::ScorerProtocolError(format!("missing score for {p:?}"))),
                Some(v) if !v.is_finite() => {
                    Err(AssessError::ScorerProtocolError(format!("non-finite score for {p:?}")))
                }
                Some(&v) => Ok(v),
            })
            .collect()
    }

    pub fn score(&self, asset_id: &str, views: &[impl AsRef<Path>]) -> Result<ScoreReport, AssessError> {
        if views.is_empty() {
            return Err(AssessError::NoViews);
        }
        let mut images = Vec::with_capacity(views.len());
        for v in views {
            let p = v.as_ref();
            if !p.is_file() {
                return Err(AssessError::InvalidInput(format!("view {} does not exist", p.display())));
            }
            images.push(p.to_string_lossy().into_owned());
        }
        let aesthetic = self.score_metric(&images, Metric::Aesthetic)?;
        let quality = self.score_metric(&images, Metric::Quality)?;
        let per_view = aesthetic
            .into_iter()
            .zip(quality)
            .map(|(aesthetic, quality)| ViewScore { aesthetic, quality })
            .collect();
        ScoreReport::from_views(asset_id, &self.id, per_view)
    }
}

pub fn external_score(
    asset_id: &str,
    views: &[impl AsRef<Path>],
    scorer: &ExternalScorerConfig,
) -> Result<ScoreReport, AssessError> {
    ExternalScorer::new(scorer.clone()).score(asset_id, views)
}
