//! Burnt-in annotation extraction: OCR through a pluggable backend, then a
//! pattern grammar over the normalised token stream.

mod backend;
mod fontocr;
mod grammar;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imgprim::{BoundingBox, ScanImage};

pub use backend::{serve, MockBackend, ProcessBackend};
pub use fontocr::FontBackend;
pub use grammar::{classify_annotation, normalize_tokens, Grammar, PatternCategory};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TextkxConfig {
    pub min_confidence: f64,
    /// Replacement alternatives per keyword category (regex syntax, matched
    /// against whole uppercase words).
    pub patterns: BTreeMap<PatternCategory, Vec<String>>,
}

impl Default for TextkxConfig {
    fn default() -> Self {
        Self {
            min_confidence: 0.30,
            patterns: BTreeMap::new(),
        }
    }
}

impl TextkxConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.min_confidence) {
            return Err(Error::Config(format!(
                "textkx.min_confidence = {} is outside [0, 1]",
                self.min_confidence
            )));
        }
        self.grammar().map(|_| ())
    }

    pub fn grammar(&self) -> Result<Grammar> {
        Grammar::new(&self.patterns)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OcrToken {
    pub text: String,
    pub bbox: BoundingBox,
    pub confidence: f64,
}

impl OcrToken {
    pub fn new(text: impl Into<String>, bbox: BoundingBox, confidence: f64) -> Result<Self> {
        let text = text.into();
        if text.trim().is_empty() {
            return Err(Error::Backend("OCR token with empty text".into()));
        }
        if !(0.0..=1.0).contains(&confidence) {
            return Err(Error::Backend(format!(
                "OCR confidence {confidence} outside [0, 1] for {text:?}"
            )));
        }
        Ok(Self {
            text,
            bbox,
            confidence,
        })
    }
}

/// Anything that turns pixels into positioned words. Implementations must be
/// deterministic for a fixed input; each worker owns its own handle.
pub trait OcrBackend: Send {
    fn recognize(&mut self, img: &ScanImage) -> Result<Vec<OcrToken>>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Laterality {
    Left,
    Right,
    #[default]
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Orientation {
    Radial,
    Antiradial,
    Transverse,
    Sagittal,
    Longitudinal,
    Oblique,
    #[default]
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum DistanceUnit {
    Cm,
    Mm,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Distance {
    pub value: f64,
    pub unit: DistanceUnit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClockPosition {
    pub hour: u8,
    pub minute: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Field {
    Laterality,
    Orientation,
    Distance,
    ClockPosition,
    Axilla,
    LesionMeasurement,
    Procedural,
}

/// Normalised words `[first, last]` that justified a field.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchSpan {
    pub field: Field,
    pub words: [usize; 2],
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct TextAnnotation {
    pub tokens: Vec<OcrToken>,
    pub laterality: Laterality,
    pub orientation: Orientation,
    pub distance_from_nipple: Option<Distance>,
    pub clock_position: Option<ClockPosition>,
    pub axilla: bool,
    pub lesion_measurement: bool,
    pub procedural: bool,
    pub raw_concatenation: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub spans: Vec<MatchSpan>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub conflicts: Vec<String>,
}

/// Runs the backend, keeps tokens with `confidence >= min_confidence` and
/// orders them top-to-bottom, then left-to-right.
pub fn recognize_text(
    img: &ScanImage,
    backend: &mut dyn OcrBackend,
    min_confidence: f64,
) -> Result<Vec<OcrToken>> {
    let mut tokens = Vec::new();
    for t in backend.recognize(img)? {
        let t = OcrToken::new(t.text, t.bbox, t.confidence)?;
        if t.confidence >= min_confidence {
            tokens.push(t);
        }
    }
    reading_order(&mut tokens);
    Ok(tokens)
}

/// Sorts tokens into lines, top to bottom, and each line left to right. A
/// token belongs to the current line when its vertical centre falls inside
/// the line's extent, so short glyphs such as '*' stay in place.
pub fn reading_order(tokens: &mut Vec<OcrToken>) {
    tokens.sort_by_key(|t| (t.bbox.y_top, t.bbox.x_left));
    let mut lines: Vec<(usize, usize, Vec<OcrToken>)> = Vec::new();
    for t in tokens.drain(..) {
        let centre = (t.bbox.y_top + t.bbox.y_bottom) / 2;
        match lines.last_mut() {
            Some((top, bottom, line)) if centre >= *top && centre < *bottom => {
                *bottom = (*bottom).max(t.bbox.y_bottom);
                line.push(t);
            }
            _ => lines.push((t.bbox.y_top, t.bbox.y_bottom, vec![t])),
        }
    }
    for (_, _, mut line) in lines {
        line.sort_by_key(|t| t.bbox.x_left);
        tokens.extend(line);
    }
}

/// True when any token has at least two characters; single characters are
/// too often speckle misreads.
pub fn detect_text_presence(tokens: &[OcrToken]) -> bool {
    tokens.iter().any(|t| t.text.trim().chars().count() >= 2)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tok(text: &str, x: usize, y: usize, conf: f64) -> OcrToken {
        OcrToken::new(text, BoundingBox::new(x, y, x + 10, y + 10).unwrap(), conf).unwrap()
    }

    #[test]
    fn short_glyphs_keep_their_line_position() {
        let mut v = vec![
            OcrToken::new("1.2", BoundingBox::new(0, 6, 30, 20).unwrap(), 1.0).unwrap(),
            OcrToken::new("*", BoundingBox::new(40, 8, 50, 18).unwrap(), 1.0).unwrap(),
            OcrToken::new("0.8", BoundingBox::new(60, 6, 90, 20).unwrap(), 1.0).unwrap(),
            OcrToken::new("LT", BoundingBox::new(0, 26, 20, 40).unwrap(), 1.0).unwrap(),
        ];
        v.swap(0, 3);
        reading_order(&mut v);
        let words: Vec<&str> = v.iter().map(|t| t.text.as_str()).collect();
        assert_eq!(words, ["1.2", "*", "0.8", "LT"]);
    }

    #[test]
    fn confidence_filter_and_order() {
        let img = ScanImage::filled_gray(50, 50, 0).with_source_id("a");
        let mut mock = MockBackend::default();
        mock.insert(
            "a",
            vec![tok("noise", 0, 0, 0.2), tok("BREAST", 30, 5, 0.9), tok("RT", 2, 5, 0.9)],
        );
        let got = recognize_text(&img, &mut mock, 0.4).unwrap();
        let texts: Vec<&str> = got.iter().map(|t| t.text.as_str()).collect();
        assert_eq!(texts, ["RT", "BREAST"]);
        // the boundary value itself is kept
        let got = recognize_text(&img, &mut mock, 0.2).unwrap();
        assert_eq!(got.len(), 3);
    }

    #[test]
    fn blank_image_no_tokens() {
        let img = ScanImage::filled_gray(50, 50, 0);
        assert!(recognize_text(&img, &mut MockBackend::default(), 0.3).unwrap().is_empty());
    }

    #[test]
    fn presence_rule() {
        assert!(!detect_text_presence(&[]));
        assert!(!detect_text_presence(&[tok("L", 0, 0, 1.0)]));
        assert!(detect_text_presence(&[tok("CYST", 0, 0, 1.0)]));
    }

    #[test]
    fn token_invariants() {
        let b = BoundingBox::new(0, 0, 1, 1).unwrap();
        assert!(OcrToken::new("  ", b, 0.5).is_err());
        assert!(OcrToken::new("A", b, 1.5).is_err());
        assert!(OcrToken::new("A", b, 1.0).is_ok());
    }
}
