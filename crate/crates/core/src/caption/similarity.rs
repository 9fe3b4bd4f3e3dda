use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::CaptionError;
use crate::process::{ProcessConfig, ProcessRunner};

/// Lowercased maximal runs of alphanumeric characters.
pub fn tokens(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(|t| t.to_lowercase())
        .collect()
}

pub trait Similarity: Sync {
    fn id(&self) -> String;

    /// Similarity of each pair, each in [0, 1].
    fn batch(&self, pairs: &[(&str, &str)]) -> Result<Vec<f64>, CaptionError>;
}

/// Cosine of term-frequency vectors. Counts are integers, so the dot product
/// and norms are exact and the result is exactly symmetric.
#[derive(Debug, Clone, Copy, Default)]
pub struct TfCosine;

fn term_counts(text: &str) -> BTreeMap<String, u64> {
    let mut m = BTreeMap::new();
    for t in tokens(text) {
        *m.entry(t).or_insert(0) += 1;
    }
    m
}

pub fn sentence_similarity(a: &str, b: &str) -> f64 {
    let (ta, tb) = (term_counts(a), term_counts(b));
    if ta.is_empty() || tb.is_empty() {
        return 0.0;
    }
    let dot: u64 = ta.iter().filter_map(|(k, ca)| tb.get(k).map(|cb| ca * cb)).sum();
    let na: u64 = ta.values().map(|c| c * c).sum();
    let nb: u64 = tb.values().map(|c| c * c).sum();
    (dot as f64 / ((na * nb) as f64).sqrt()).clamp(0.0, 1.0)
}

impl Similarity for TfCosine {
    fn id(&self) -> String {
        "tf-cosine".into()
    }

    fn batch(&self, pairs: &[(&str, &str)]) -> Result<Vec<f64>, CaptionError> {
        Ok(pairs.iter().map(|(a, b)| sentence_similarity(a, b)).collect())
    }
}

#[derive(Debug, Serialize)]
struct PairsRequest<'a> {
    pairs: Vec<[&'a str; 2]>,
}

#[derive(Debug, Deserialize)]
struct SimsResponse {
    sims: Vec<f64>,
}

/// Embedding similarity served by an external process. Returned values are
/// clamped to [0, 1].
pub struct ExternalSimilarity {
    runner: ProcessRunner,
}

impl ExternalSimilarity {
    pub fn new(config: ProcessConfig) -> Self {
        ExternalSimilarity {
            runner: ProcessRunner::new(config),
        }
    }
}

impl Similarity for ExternalSimilarity {
    fn id(&self) -> String {
        format!("cmd:{}", self.runner.config().program.display())
    }

    fn batch(&self, pairs: &[(&str, &str)]) -> Result<Vec<f64>, CaptionError> {
        if pairs.is_empty() {
            return Ok(Vec::new());
        }
        let request = PairsRequest {
            pairs: pairs.iter().map(|&(a, b)| [a, b]).collect(),
        };
        let response: SimsResponse = self
            .runner
            .call(&request)
            .map_err(|e| CaptionError::Similarity(e.to_string()))?;
        if response.sims.len() != pairs.len() {
            return Err(CaptionError::Similarity(format!(
                "expected {} similarities, got {}",
                pairs.len(),
                response.sims.len()
            )));
        }
        response
            .sims
            .into_iter()
            .map(|s| {
                if s.is_finite() {
                    Ok(s.clamp(0.0, 1.0))
                } else {
                    Err(CaptionError::Similarity("non-finite similarity".into()))
                }
            })
            .collect()
    }
}
