//! Think/answer annotation parsing and the caption reward: a content F1 over
//! sentence matches plus a multi-view keyword pattern metric.

mod parse;
mod pattern;
mod similarity;

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use parse::{parse_annotation, split_sentences, CaptionAnnotation, Dimension};
pub use pattern::{pattern_metric, PatternLexicon, PatternMatch, DEFAULT_KEYWORDS, PATTERN_SATURATION};
pub use similarity::{sentence_similarity, tokens, ExternalSimilarity, Similarity, TfCosine};

pub const DEFAULT_TAU: f64 = 0.35;

#[derive(Debug, Error)]
pub enum CaptionError {
    #[error("missing or unbalanced tag {0}")]
    MissingTag(String),
    #[error("answer is empty")]
    EmptyAnswer,
    #[error("sentence list is empty")]
    EmptyInput,
    #[error("invalid lexicon: {0}")]
    Lexicon(String),
    #[error("similarity provider failed: {0}")]
    Similarity(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchPair {
    pub predicted: usize,
    pub reference: usize,
    pub similarity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContentScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Best reference for each predicted sentence whose similarity clears tau.
    pub match_pairs: Vec<MatchPair>,
}

pub fn f1_score(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

/// Mean of thresholded best-match similarities. Terms are summed in sorted
/// order so the result does not depend on sentence order.
fn thresholded_mean(best: &[f64], tau: f64) -> f64 {
    let mut terms: Vec<f64> = best.iter().map(|&s| if s >= tau { s } else { 0.0 }).collect();
    terms.sort_by(f64::total_cmp);
    terms.iter().sum::<f64>() / terms.len() as f64
}

/// Sentence-level precision, recall and F1. Every predicted sentence takes its
/// most similar reference sentence (references may be reused) and counts only
/// if that similarity is at least `tau`; recall is the mirror image.
pub fn content_f1_with<S: AsRef<str>, T: AsRef<str>>(
    predicted: &[S],
    reference: &[T],
    tau: f64,
    sim: &dyn Similarity,
) -> Result<ContentScore, CaptionError> {
    if predicted.is_empty() || reference.is_empty() {
        return Err(CaptionError::EmptyInput);
    }
    let (n, m) = (predicted.len(), reference.len());
    let pairs: Vec<(&str, &str)> = predicted
        .iter()
        .flat_map(|p| reference.iter().map(move |g| (p.as_ref(), g.as_ref())))
        .collect();
    let sims = sim.batch(&pairs)?;
    if sims.len() != pairs.len() {
        return Err(CaptionError::Similarity("similarity count mismatch".into()));
    }
    let at = |i: usize, j: usize| sims[i * m + j];

    let mut row_best = Vec::with_capacity(n);
    let mut match_pairs = Vec::new();
    for i in 0..n {
        let (mut best_j, mut best) = (0, at(i, 0));
        for j in 1..m {
            if at(i, j) > best {
                best = at(i, j);
                best_j = j;
            }
        }
        row_best.push(best);
        if best >= tau {
            match_pairs.push(MatchPair {
                predicted: i,
                reference: best_j,
                similarity: best,
            });
        }
    }
    let col_best: Vec<f64> = (0..m)
        .map(|j| (0..n).map(|i| at(i, j)).fold(f64::NEG_INFINITY, f64::max))
        .collect();

    let precision = thresholded_mean(&row_best, tau);
    let recall = thresholded_mean(&col_best, tau);
    Ok(ContentScore {
        precision,
        recall,
        f1: f1_score(precision, recall),
        match_pairs,
    })
}

pub fn content_f1<S: AsRef<str>, T: AsRef<str>>(
    predicted: &[S],
    reference: &[T],
    tau: f64,
) -> Result<ContentScore, CaptionError> {
    content_f1_with(predicted, reference, tau, &TfCosine)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub pattern_matches: usize,
    pub pattern_metric: f64,
    pub reward: f64,
    pub match_pairs: Vec<MatchPair>,
    #[serde(default)]
    pub matched_keywords: Vec<String>,
}

pub fn reward_with<T: AsRef<str>>(
    annotation: &CaptionAnnotation,
    reference: &[T],
    lexicon: &PatternLexicon,
    tau: f64,
    sim: &dyn Similarity,
) -> Result<RewardBreakdown, CaptionError> {
    let content = content_f1_with(&annotation.answer_sentences, reference, tau, sim)?;
    let pattern = pattern_metric(&annotation.answer, lexicon);
    Ok(RewardBreakdown {
        precision: content.precision,
        recall: content.recall,
        f1: content.f1,
        pattern_matches: pattern.count,
        pattern_metric: pattern.metric,
        reward: content.f1 + pattern.metric,
        match_pairs: content.match_pairs,
        matched_keywords: pattern.matched,
    })
}

pub fn reward<T: AsRef<str>>(
    annotation: &CaptionAnnotation,
    reference: &[T],
    lexicon: &PatternLexicon,
    tau: f64,
) -> Result<RewardBreakdown, CaptionError> {
    reward_with(annotation, reference, lexicon, tau, &TfCosine)
}
