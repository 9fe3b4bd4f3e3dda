use std::collections::BTreeMap;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::CaptionError;

/// The five scoring dimensions of the think block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Dimension {
    Subject,
    Material,
    Functional,
    Details,
    #[serde(rename = "OCR")]
    Ocr,
}

impl Dimension {
    pub const ALL: [Dimension; 5] = [
        Dimension::Subject,
        Dimension::Material,
        Dimension::Functional,
        Dimension::Details,
        Dimension::Ocr,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Dimension::Subject => "Subject",
            Dimension::Material => "Material",
            Dimension::Functional => "Functional",
            Dimension::Details => "Details",
            Dimension::Ocr => "OCR",
        }
    }

    pub fn from_label(label: &str) -> Option<Dimension> {
        match label.to_ascii_lowercase().as_str() {
            "subject" => Some(Dimension::Subject),
            "material" => Some(Dimension::Material),
            "functional" | "function" => Some(Dimension::Functional),
            "details" | "detail" => Some(Dimension::Details),
            "ocr" => Some(Dimension::Ocr),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaptionAnnotation {
    pub think: BTreeMap<Dimension, String>,
    pub answer: String,
    pub answer_sentences: Vec<String>,
    /// Non-fatal findings such as unknown or repeated dimension labels.
    #[serde(default)]
    pub warnings: Vec<String>,
}

fn tagged<'a>(text: &'a str, tag: &str) -> Result<&'a str, CaptionError> {
    let open = format!("<{tag}>");
    let close = format!("</{tag}>");
    let start = text.find(&open).ok_or_else(|| CaptionError::MissingTag(open.clone()))?;
    let body = &text[start + open.len()..];
    let end = body.find(&close).ok_or_else(|| CaptionError::MissingTag(close.clone()))?;
    let inner = &body[..end];
    if inner.contains(&open) {
        return Err(CaptionError::MissingTag(close));
    }
    Ok(inner)
}

/// A label is a single word, optionally bold or bulleted, optionally followed
/// by a parenthetical gloss, then a colon. It must start a line or follow
/// sentence punctuation.
fn label_pattern() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"(?:^|[\n.;])[ \t]*(?:[-*][ \t]+)?(?:\*\*)?([A-Za-z]+)(?:\*\*)?[ \t]*(?:\([^)\n]*\))?[ \t]*(?:\*\*)?:")
            .expect("label pattern compiles")
    })
}

fn split_dimensions(think: &str, warnings: &mut Vec<String>) -> BTreeMap<Dimension, String> {
    let mut out = BTreeMap::new();
    let labels: Vec<(usize, usize, &str)> = label_pattern()
        .captures_iter(think)
        .map(|c| {
            let whole = c.get(0).unwrap();
            (whole.start(), whole.end(), c.get(1).unwrap().as_str())
        })
        .collect();
    for (k, &(_, end, label)) in labels.iter().enumerate() {
        let stop = labels.get(k + 1).map_or(think.len(), |next| next.0);
        // the separator that ended the previous span belongs to it
        let stop = if stop < think.len() && think[stop..].starts_with(['.', ';']) { stop + 1 } else { stop };
        let text = think[end..stop].trim().to_string();
        match Dimension::from_label(label) {
            Some(dim) => {
                if out.contains_key(&dim) {
                    warnings.push(format!("repeated dimension {label}; keeping the first"));
                } else {
                    out.insert(dim, text);
                }
            }
            None => warnings.push(format!("unknown dimension {label}")),
        }
    }
    for dim in Dimension::ALL {
        if !out.contains_key(&dim) {
            warnings.push(format!("dimension {} absent", dim.label()));
        }
    }
    out
}

/// Splits on `.`, `!` or `?` runs followed by whitespace or end of text.
pub fn split_sentences(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut start = 0;
    let mut i = 0;
    while i < chars.len() {
        if matches!(chars[i].1, '.' | '!' | '?') {
            let mut j = i;
            while j + 1 < chars.len() && matches!(chars[j + 1].1, '.' | '!' | '?') {
                j += 1;
            }
            let at_boundary = j + 1 == chars.len() || chars[j + 1].1.is_whitespace();
            if at_boundary {
                let end = chars.get(j + 1).map_or(text.len(), |c| c.0);
                let s = text[start..end].trim();
                if !s.is_empty() {
                    out.push(s.to_string());
                }
                start = end;
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }
    let tail = text[start..].trim();
    if !tail.is_empty() {
        out.push(tail.to_string());
    }
    out
}

pub fn parse_annotation(text: &str) -> Result<CaptionAnnotation, CaptionError> {
    let think = tagged(text, "think")?;
    let answer = tagged(text, "answer")?.trim();
    if answer.is_empty() {
        return Err(CaptionError::EmptyAnswer);
    }
    let mut warnings = Vec::new();
    let think = split_dimensions(think, &mut warnings);
    Ok(CaptionAnnotation {
        think,
        answer: answer.to_string(),
        answer_sentences: split_sentences(answer),
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "<think>
Subject(Judging the type of the object): A vintage brass telescope on a tripod.
Material(Describing the materials): Polished brass tube, dark wooden legs.
Functional(Inferring the use): Used for stargazing.
Details(Noting fine features): Engraved rings near the eyepiece.
OCR(Reading any text): None visible.
</think>
<answer>The video opens on the front of a brass telescope resting on a wooden tripod. As the camera circles around, the side view reveals engraved rings.

Turning to the back, the eyepiece appears clearly! The full 360-degree orbit shows no text.</answer>";

    #[test]
    fn well_formed_sample() {
        let a = parse_annotation(SAMPLE).unwrap();
        assert_eq!(a.think.len(), 5);
        assert_eq!(a.think[&Dimension::Subject], "A vintage brass telescope on a tripod.");
        assert_eq!(a.think[&Dimension::Ocr], "None visible.");
        assert_eq!(a.answer_sentences.len(), 4);
        assert_eq!(a.answer_sentences[2], "Turning to the back, the eyepiece appears clearly!");
        assert!(a.warnings.is_empty(), "{:?}", a.warnings);
    }

    #[test]
    fn inline_spans_and_unknown_labels() {
        let a = parse_annotation(
            "<think>subject: a mug; **Material**: ceramic. Colour: blue. OCR: \"CAFE\"</think><answer>A mug.</answer>",
        )
        .unwrap();
        assert_eq!(a.think[&Dimension::Subject], "a mug;");
        assert_eq!(a.think[&Dimension::Material], "ceramic.");
        assert_eq!(a.think[&Dimension::Ocr], "\"CAFE\"");
        assert!(a.warnings.iter().any(|w| w.contains("unknown dimension Colour")));
        assert!(a.warnings.iter().any(|w| w.contains("Functional absent")));
    }

    #[test]
    fn missing_tags() {
        assert!(matches!(
            parse_annotation("<think>x</think><answer>A car."),
            Err(CaptionError::MissingTag(t)) if t == "</answer>"
        ));
        assert!(matches!(parse_annotation("<answer>A car.</answer>"), Err(CaptionError::MissingTag(_))));
        assert!(matches!(
            parse_annotation("<think>x</think><answer>  </answer>"),
            Err(CaptionError::EmptyAnswer)
        ));
    }

    #[test]
    fn segmentation() {
        assert_eq!(split_sentences("A red car. It has a spoiler."), vec!["A red car.", "It has a spoiler."]);
        assert_eq!(split_sentences("Version 2.5 ships... Really?! yes"), vec!["Version 2.5 ships...", "Really?!", "yes"]);
        assert!(split_sentences("  ").is_empty());
    }
}
