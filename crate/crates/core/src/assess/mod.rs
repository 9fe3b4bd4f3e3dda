//! View scoring, threshold filtering and score-distribution statistics.

mod external;
mod histogram;
pub mod proxy;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::process::ProcessError;
use crate::raster::ImageBuffer;

pub use external::{external_score, ExternalScorer, ExternalScorerConfig, ScoreRequest, ScoreResponse};
pub use histogram::{score_histogram, Histogram, HistogramBin, Metric};
pub use proxy::{proxy_aesthetic, proxy_quality};

pub const DEFAULT_THRESHOLD: f64 = 4.0;
pub const BUILTIN_SCORER_ID: &str = "builtin-proxy";

#[derive(Debug, Error)]
pub enum AssessError {
    #[error("scorer failed to launch: {0}")]
    ScorerLaunchFailure(String),
    #[error("scorer protocol error: {0}")]
    ScorerProtocolError(String),
    #[error("scorer timed out after {0:?}")]
    ScorerTimeout(std::time::Duration),
    #[error("no views to score")]
    NoViews,
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl From<ProcessError> for AssessError {
    fn from(e: ProcessError) -> Self {
        match e {
            ProcessError::Launch { .. } => AssessError::ScorerLaunchFailure(e.to_string()),
            ProcessError::Timeout(d) => AssessError::ScorerTimeout(d),
            ProcessError::Protocol(m) => AssessError::ScorerProtocolError(m),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ViewScore {
    pub aesthetic: f64,
    pub quality: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub asset_id: String,
    pub aesthetic: f64,
    pub quality: f64,
    pub scorer_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_view: Option<Vec<ViewScore>>,
}

impl ScoreReport {
    /// Pools per-view scores into a clip-level report.
    pub fn from_views(asset_id: &str, scorer_id: &str, per_view: Vec<ViewScore>) -> Result<ScoreReport, AssessError> {
        if per_view.is_empty() {
            return Err(AssessError::NoViews);
        }
        let a: Vec<f64> = per_view.iter().map(|v| v.aesthetic).collect();
        let q: Vec<f64> = per_view.iter().map(|v| v.quality).collect();
        let report = ScoreReport {
            asset_id: asset_id.to_string(),
            aesthetic: proxy::pooled_mean(&a),
            quality: proxy::pooled_mean(&q),
            scorer_id: scorer_id.to_string(),
            per_view: Some(per_view),
        };
        report.validate()?;
        Ok(report)
    }

    pub fn validate(&self) -> Result<(), AssessError> {
        if !self.aesthetic.is_finite() || !self.quality.is_finite() {
            return Err(AssessError::InvalidInput("non-finite score".into()));
        }
        Ok(())
    }
}

/// Scores rendered views with the built-in proxies.
pub fn proxy_report(asset_id: &str, views: &[ImageBuffer]) -> Result<ScoreReport, AssessError> {
    let per_view = views
        .iter()
        .map(|v| ViewScore {
            aesthetic: proxy::aesthetic_view_score(v),
            quality: proxy::quality_view_score(v),
        })
        .collect();
    ScoreReport::from_views(asset_id, BUILTIN_SCORER_ID, per_view)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterPolicy {
    pub aesthetic_threshold: f64,
    pub quality_threshold: f64,
}

impl Default for FilterPolicy {
    fn default() -> Self {
        FilterPolicy {
            aesthetic_threshold: DEFAULT_THRESHOLD,
            quality_threshold: DEFAULT_THRESHOLD,
        }
    }
}

impl FilterPolicy {
    pub fn validate(&self) -> Result<(), AssessError> {
        if self.aesthetic_threshold.is_finite() && self.quality_threshold.is_finite() {
            Ok(())
        } else {
            Err(AssessError::InvalidInput("thresholds must be finite".into()))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterDecision {
    pub keep: bool,
    /// Score minus threshold; positive means the score surpasses it.
    pub aesthetic_margin: f64,
    pub quality_margin: f64,
}

/// Keeps an asset only when both scores strictly exceed their thresholds.
pub fn apply_filter(report: &ScoreReport, policy: &FilterPolicy) -> FilterDecision {
    let aesthetic_margin = report.aesthetic - policy.aesthetic_threshold;
    let quality_margin = report.quality - policy.quality_threshold;
    FilterDecision {
        keep: report.aesthetic > policy.aesthetic_threshold && report.quality > policy.quality_threshold,
        aesthetic_margin,
        quality_margin,
    }
}
