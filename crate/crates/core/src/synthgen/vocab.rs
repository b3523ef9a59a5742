//! Annotation phrases the generator burns into scenes, grouped by the field
//! each one is meant to set.

use serde::{Deserialize, Serialize};

use crate::textkx::{ClockPosition, Distance, DistanceUnit, Laterality, Orientation};

/// Expected annotation fields for a rendered label.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct TextExpect {
    pub laterality: Laterality,
    pub orientation: Orientation,
    pub clock_position: Option<ClockPosition>,
    pub distance_from_nipple: Option<Distance>,
    pub axilla: bool,
    pub lesion_measurement: bool,
    pub procedural: bool,
}

impl TextExpect {
    /// Field-wise union; `other` wins where both are set.
    pub fn merge(&mut self, other: &TextExpect) {
        if other.laterality != Laterality::None {
            self.laterality = other.laterality;
        }
        if other.orientation != Orientation::None {
            self.orientation = other.orientation;
        }
        self.clock_position = other.clock_position.or(self.clock_position);
        self.distance_from_nipple = other.distance_from_nipple.or(self.distance_from_nipple);
        self.axilla |= other.axilla;
        self.lesion_measurement |= other.lesion_measurement;
        self.procedural |= other.procedural;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PhraseKind {
    Laterality,
    Orientation,
    Clock,
    Distance,
    Measurement,
    Axilla,
    Procedural,
    Filler,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Phrase {
    pub kind: PhraseKind,
    pub text: String,
    pub expect: TextExpect,
}

pub const FILLERS: &[&str] = &["BREAST", "US", "LESION", "CYST", "MASS", "SCAN"];

const RIGHT: &[&str] = &["RT", "RIGHT", "RT BREAST", "RIGHT BREAST"];
const LEFT: &[&str] = &["LT", "LEFT", "LT BREAST", "LEFT BREAST"];

const ORIENTATIONS: &[(Orientation, &[&str])] = &[
    (Orientation::Radial, &["RAD", "RADIAL"]),
    (Orientation::Antiradial, &["ARAD", "ANTI RADIAL", "ANTI-RAD", "ANTIRADIAL"]),
    (Orientation::Transverse, &["TRANS", "TRV", "TRANSVERSE"]),
    (Orientation::Sagittal, &["SAG", "SAGITTAL"]),
    (Orientation::Longitudinal, &["LONG", "LONGITUDINAL"]),
    (Orientation::Oblique, &["OBL", "OBLIQUE"]),
];

const DISTANCES_CM: &[&str] = &["1", "2", "3", "4.5", "2.5", "10"];
const DISTANCES_MM: &[&str] = &["5", "15", "25"];
const DISTANCE_FORMS: &[&str] = &["{v} {u} FN", "{v}{u} FN", "FN {v} {u}", "{v} {u} FROM NIPPLE"];

const MEASURE_VALUES: &[(&str, &str, &str)] =
    &[("1.2", "0.8", "0.6"), ("2.1", "1.5", "1.1"), ("12", "9", "7"), ("0.5", "0.4", "0.3")];
const MEASURE_FORMS: &[&str] = &["{a} X {b} CM", "{a}X{b}CM", "{a} * {b} MM", "{a} X {b} X {c} CM", "{a} X {b}"];

const AXILLA: &[&str] = &["AX", "AXILLA", "AXILLARY"];

const PROCEDURAL: &[&str] = &[
    "BIOPSY",
    "US GUIDED BIOPSY",
    "CLIP PLACED",
    "PRE-FIRE",
    "POST FIRE",
    "CORE BX",
    "FNA",
    "WIRE LOC",
    "MARKER",
    "COIL",
    "NEEDLE",
    "ASPIRATION",
    "LOCALIZATION",
    "GUIDANCE",
];

fn phrase(kind: PhraseKind, text: impl Into<String>, expect: TextExpect) -> Phrase {
    Phrase {
        kind,
        text: text.into(),
        expect,
    }
}

pub fn laterality_phrases() -> Vec<Phrase> {
    let mut out = Vec::new();
    for (side, words) in [(Laterality::Right, RIGHT), (Laterality::Left, LEFT)] {
        for w in words {
            out.push(phrase(
                PhraseKind::Laterality,
                *w,
                TextExpect {
                    laterality: side,
                    ..TextExpect::default()
                },
            ));
        }
    }
    out
}

pub fn orientation_phrases() -> Vec<Phrase> {
    ORIENTATIONS
        .iter()
        .flat_map(|(o, words)| {
            words.iter().map(|w| {
                phrase(
                    PhraseKind::Orientation,
                    *w,
                    TextExpect {
                        orientation: *o,
                        ..TextExpect::default()
                    },
                )
            })
        })
        .collect()
}

pub fn clock_phrases() -> Vec<Phrase> {
    let mut out = Vec::new();
    for hour in 1..=12u8 {
        for minute in [0u8, 30] {
            let expect = TextExpect {
                clock_position: Some(ClockPosition { hour, minute }),
                ..TextExpect::default()
            };
            out.push(phrase(PhraseKind::Clock, format!("{hour}:{minute:02}"), expect));
            if minute == 0 {
                out.push(phrase(PhraseKind::Clock, format!("{hour} O'CLOCK"), expect));
            }
        }
    }
    out
}

pub fn distance_phrases() -> Vec<Phrase> {
    let mut out = Vec::new();
    let units = [(DistanceUnit::Cm, "CM", DISTANCES_CM), (DistanceUnit::Mm, "MM", DISTANCES_MM)];
    for (unit, u, values) in units {
        for v in values {
            for form in DISTANCE_FORMS {
                let expect = TextExpect {
                    distance_from_nipple: Some(Distance {
                        value: v.parse().expect("vocabulary number"),
                        unit,
                    }),
                    ..TextExpect::default()
                };
                let text = form.replace("{v}", v).replace("{u}", u);
                out.push(phrase(PhraseKind::Distance, text, expect));
            }
        }
    }
    out
}

pub fn measurement_phrases() -> Vec<Phrase> {
    let expect = TextExpect {
        lesion_measurement: true,
        ..TextExpect::default()
    };
    MEASURE_VALUES
        .iter()
        .flat_map(|(a, b, c)| {
            MEASURE_FORMS.iter().map(move |f| {
                let text = f.replace("{a}", a).replace("{b}", b).replace("{c}", c);
                phrase(PhraseKind::Measurement, text, expect)
            })
        })
        .collect()
}

pub fn axilla_phrases() -> Vec<Phrase> {
    let expect = TextExpect {
        axilla: true,
        ..TextExpect::default()
    };
    AXILLA
        .iter()
        .map(|w| phrase(PhraseKind::Axilla, *w, expect))
        .collect()
}

pub fn procedural_phrases() -> Vec<Phrase> {
    let expect = TextExpect {
        procedural: true,
        ..TextExpect::default()
    };
    PROCEDURAL
        .iter()
        .map(|w| phrase(PhraseKind::Procedural, *w, expect))
        .collect()
}

pub fn filler_phrases() -> Vec<Phrase> {
    FILLERS
        .iter()
        .map(|w| phrase(PhraseKind::Filler, *w, TextExpect::default()))
        .collect()
}

pub fn phrases(kind: PhraseKind) -> Vec<Phrase> {
    match kind {
        PhraseKind::Laterality => laterality_phrases(),
        PhraseKind::Orientation => orientation_phrases(),
        PhraseKind::Clock => clock_phrases(),
        PhraseKind::Distance => distance_phrases(),
        PhraseKind::Measurement => measurement_phrases(),
        PhraseKind::Axilla => axilla_phrases(),
        PhraseKind::Procedural => procedural_phrases(),
        PhraseKind::Filler => filler_phrases(),
    }
}

pub const ALL_KINDS: [PhraseKind; 8] = [
    PhraseKind::Laterality,
    PhraseKind::Orientation,
    PhraseKind::Clock,
    PhraseKind::Distance,
    PhraseKind::Measurement,
    PhraseKind::Axilla,
    PhraseKind::Procedural,
    PhraseKind::Filler,
];

#[cfg(test)]
mod tests {
    use super::*;
    use crate::font::is_renderable;
    use crate::imgprim::BoundingBox;
    use crate::textkx::{classify_annotation, OcrToken, TextAnnotation};

    fn classify(text: &str) -> TextAnnotation {
        let tokens: Vec<OcrToken> = text
            .split(' ')
            .enumerate()
            .map(|(i, w)| {
                OcrToken::new(w, BoundingBox::new(i * 30, 0, i * 30 + 20, 14).unwrap(), 1.0)
                    .unwrap()
            })
            .collect();
        classify_annotation(&tokens)
    }

    fn fields(a: &TextAnnotation) -> TextExpect {
        TextExpect {
            laterality: a.laterality,
            orientation: a.orientation,
            clock_position: a.clock_position,
            distance_from_nipple: a.distance_from_nipple,
            axilla: a.axilla,
            lesion_measurement: a.lesion_measurement,
            procedural: a.procedural,
        }
    }

    #[test]
    fn vocabulary_is_renderable() {
        for kind in ALL_KINDS {
            for p in phrases(kind) {
                assert!(p.text.chars().all(is_renderable), "{:?}", p.text);
            }
        }
    }

    #[test]
    fn each_phrase_sets_only_its_field() {
        for kind in ALL_KINDS {
            for p in phrases(kind) {
                for filler in ["", "BREAST ", "LESION "] {
                    for text in [format!("{filler}{}", p.text), format!("{} {filler}", p.text)] {
                        let a = classify(text.trim());
                        assert_eq!(fields(&a), p.expect, "{text:?}");
                        assert!(a.conflicts.is_empty(), "{text:?}");
                    }
                }
            }
        }
    }

    #[test]
    fn phrase_pairs_compose() {
        let all: Vec<Phrase> = ALL_KINDS.iter().flat_map(|&k| phrases(k)).collect();
        for a in &all {
            for b in &all {
                if a.kind == b.kind && a.kind != PhraseKind::Filler {
                    continue;
                }
                let got = fields(&classify(&format!("{} {}", a.text, b.text)));
                let mut want = a.expect;
                want.merge(&b.expect);
                assert_eq!(got, want, "{:?} + {:?}", a.text, b.text);
            }
        }
    }
}
