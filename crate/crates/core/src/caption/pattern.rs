use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::similarity::tokens;
use super::CaptionError;

pub const PATTERN_SATURATION: usize = 5;

pub const DEFAULT_KEYWORDS: &[&str] = &[
    "front",
    "circle-around",
    "side",
    "back",
    "self-rotation",
    "360-degree",
    "appear",
];

/// Case-insensitive multi-view keywords. Hyphens and other punctuation are
/// treated as word separators, so `360-degree` also matches `360 degree`.
#[derive(Debug, Clone, PartialEq)]
pub struct PatternLexicon {
    keywords: Vec<String>,
    token_seqs: Vec<Vec<String>>,
}

impl PatternLexicon {
    pub fn new<S: AsRef<str>>(keywords: &[S]) -> Result<PatternLexicon, CaptionError> {
        if keywords.is_empty() {
            return Err(CaptionError::Lexicon("lexicon is empty".into()));
        }
        let mut seen = BTreeSet::new();
        let mut token_seqs = Vec::with_capacity(keywords.len());
        for k in keywords {
            let k = k.as_ref();
            let seq = tokens(k);
            if seq.is_empty() {
                return Err(CaptionError::Lexicon(format!("keyword {k:?} has no words")));
            }
            if !seen.insert(seq.clone()) {
                return Err(CaptionError::Lexicon(format!("duplicate keyword {k:?}")));
            }
            token_seqs.push(seq);
        }
        Ok(PatternLexicon {
            keywords: keywords.iter().map(|k| k.as_ref().trim().to_string()).collect(),
            token_seqs,
        })
    }

    /// One keyword per line; blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<PatternLexicon, CaptionError> {
        let words: Vec<&str> = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or("").trim())
            .filter(|l| !l.is_empty())
            .collect();
        PatternLexicon::new(&words)
    }

    pub fn load(path: &Path) -> Result<PatternLexicon, CaptionError> {
        let text = std::fs::read_to_string(path).map_err(|e| CaptionError::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        PatternLexicon::parse(&text)
    }

    pub fn keywords(&self) -> &[String] {
        &self.keywords
    }
}

impl Default for PatternLexicon {
    fn default() -> Self {
        PatternLexicon::new(DEFAULT_KEYWORDS).expect("default lexicon is valid")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternMatch {
    pub count: usize,
    pub metric: f64,
    pub matched: Vec<String>,
}

fn contains_seq(haystack: &[String], needle: &[String]) -> bool {
    haystack.windows(needle.len()).any(|w| w == needle)
}

/// Counts distinct keywords present as whole-word sequences.
pub fn pattern_metric(answer: &str, lexicon: &PatternLexicon) -> PatternMatch {
    let words = tokens(answer);
    let matched: Vec<String> = lexicon
        .keywords
        .iter()
        .zip(&lexicon.token_seqs)
        .filter(|(_, seq)| contains_seq(&words, seq))
        .map(|(k, _)| k.clone())
        .collect();
    let count = matched.len();
    PatternMatch {
        count,
        metric: (count as f64 / PATTERN_SATURATION as f64).min(1.0),
        matched,
    }
}
