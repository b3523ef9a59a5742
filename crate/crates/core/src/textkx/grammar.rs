use std::collections::BTreeMap;
use std::ops::Range;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::{
    ClockPosition, Distance, DistanceUnit, Field, Laterality, MatchSpan, OcrToken, Orientation,
    TextAnnotation,
};
use crate::error::{Error, Result};

/// Keyword categories whose alternatives can be replaced from configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PatternCategory {
    Right,
    Left,
    Radial,
    Antiradial,
    Transverse,
    Sagittal,
    Longitudinal,
    Oblique,
    Axilla,
    Procedural,
    NippleCue,
}

impl PatternCategory {
    pub const ALL: [PatternCategory; 11] = [
        Self::Right,
        Self::Left,
        Self::Radial,
        Self::Antiradial,
        Self::Transverse,
        Self::Sagittal,
        Self::Longitudinal,
        Self::Oblique,
        Self::Axilla,
        Self::Procedural,
        Self::NippleCue,
    ];

    pub fn default_patterns(self) -> &'static [&'static str] {
        match self {
            Self::Right => &["RT", "RIGHT"],
            Self::Left => &["LT", "LEFT"],
            Self::Radial => &["RAD", "RADIAL"],
            Self::Antiradial => &["ARAD", "ANTI[- ]?RAD(?:IAL)?"],
            Self::Transverse => &["TRANS", "TRV", "TRANSVERSE"],
            Self::Sagittal => &["SAG", "SAGITTAL"],
            Self::Longitudinal => &["LONG", "LONGITUDINAL"],
            Self::Oblique => &["OBL", "OBLIQUE"],
            Self::Axilla => &["AX", "AXILLA", "AXILLARY"],
            Self::Procedural => &[
                "BIOPSY",
                "BX",
                "FNA",
                "CORE",
                "NEEDLE",
                "WIRE",
                "GUID(?:E|ED|ANCE)",
                "PRE[- ]?FIRE",
                "POST[- ]?FIRE",
                "CLIP",
                "MARKER",
                "COIL",
                "ASPIRATION",
                "LOC(?:ALIZATION)?",
            ],
            Self::NippleCue => &["FN", "N", "FROM NIPPLE"],
        }
    }

    fn orientation(self) -> Option<Orientation> {
        Some(match self {
            Self::Radial => Orientation::Radial,
            Self::Antiradial => Orientation::Antiradial,
            Self::Transverse => Orientation::Transverse,
            Self::Sagittal => Orientation::Sagittal,
            Self::Longitudinal => Orientation::Longitudinal,
            Self::Oblique => Orientation::Oblique,
            _ => return None,
        })
    }
}

const NUMBER_UNIT: &str = r"(?P<v>\d{1,2}(?:\.\d{1,2})?) ?(?P<u>CM|MM)";
const CLOCK: &str = r"(?P<h>1[0-2]|[1-9]):(?P<min>[0-5][0-9])|(?P<h2>1[0-2]|[1-9]) ?O'?CLOCK";
const MEASUREMENT: &str =
    r"\d{1,3}(?:\.\d{1,2})? ?[X*] ?\d{1,3}(?:\.\d{1,2})?(?: ?[X*] ?\d{1,3}(?:\.\d{1,2})?)?(?: ?(?:CM|MM))?";

/// Whole-word matcher over the space-joined word stream.
fn word_regex(body: &str) -> Result<Regex> {
    Regex::new(&format!("(?:^| )(?P<m>{body})(?: |$)"))
        .map_err(|e| Error::Config(format!("textkx pattern {body:?}: {e}")))
}

fn alternation(patterns: &[impl AsRef<str>]) -> String {
    patterns
        .iter()
        .map(|p| format!("(?:{})", p.as_ref()))
        .collect::<Vec<_>>()
        .join("|")
}

#[derive(Debug, Clone)]
pub struct Grammar {
    keywords: Vec<(PatternCategory, Regex)>,
    nipple_cue: Regex,
    number_unit: Regex,
    clock: Regex,
    measurement: Regex,
}

impl Default for Grammar {
    fn default() -> Self {
        Self::new(&BTreeMap::new()).expect("built-in grammar compiles")
    }
}

/// Space-joined normalised words with the byte offset of each word.
struct Words {
    joined: String,
    starts: Vec<usize>,
}

impl Words {
    fn new(words: &[String]) -> Self {
        let mut starts = Vec::with_capacity(words.len());
        let mut joined = String::new();
        for w in words {
            if !joined.is_empty() {
                joined.push(' ');
            }
            starts.push(joined.len());
            joined.push_str(w);
        }
        Self { joined, starts }
    }

    fn word_range(&self, bytes: Range<usize>) -> [usize; 2] {
        let first = self.starts.partition_point(|&s| s <= bytes.start) - 1;
        let last = self.starts.partition_point(|&s| s < bytes.end) - 1;
        [first, last]
    }

    fn text(&self, words: [usize; 2]) -> &str {
        let end = self
            .starts
            .get(words[1] + 1)
            .map_or(self.joined.len(), |&s| s - 1);
        &self.joined[self.starts[words[0]]..end]
    }

    /// Every whole-word match of `re`, as (word range, captures).
    fn matches<'a>(&'a self, re: &'a Regex) -> Vec<([usize; 2], regex::Captures<'a>)> {
        let mut out = Vec::new();
        let mut at = 0;
        while at <= self.joined.len() {
            let Some(caps) = re.captures_at(&self.joined, at) else {
                break;
            };
            let m = caps.name("m").expect("word regex has group m");
            at = m.end().max(at + 1);
            out.push((self.word_range(m.range()), caps));
        }
        out
    }
}

impl Grammar {
    /// Builds the grammar, replacing the alternatives of any category present
    /// in `overrides`.
    pub fn new(overrides: &BTreeMap<PatternCategory, Vec<String>>) -> Result<Self> {
        let pick = |c: PatternCategory| -> Result<Regex> {
            match overrides.get(&c) {
                Some(list) if list.is_empty() => Err(Error::Config(format!(
                    "textkx.patterns.{c:?} is empty"
                ))),
                Some(list) => word_regex(&alternation(list)),
                None => word_regex(&alternation(c.default_patterns())),
            }
        };
        let keywords = PatternCategory::ALL
            .iter()
            .filter(|&&c| c != PatternCategory::NippleCue)
            .map(|&c| pick(c).map(|re| (c, re)))
            .collect::<Result<Vec<_>>>()?;
        let cues = match overrides.get(&PatternCategory::NippleCue) {
            Some(list) if !list.is_empty() => alternation(list),
            Some(_) => return Err(Error::Config("textkx.patterns.nipple_cue is empty".into())),
            None => alternation(PatternCategory::NippleCue.default_patterns()),
        };
        let nipple_cue = Regex::new(&format!("^(?:{cues})$"))
            .map_err(|e| Error::Config(format!("textkx nipple cue: {e}")))?;
        Ok(Self {
            keywords,
            nipple_cue,
            number_unit: word_regex(NUMBER_UNIT)?,
            clock: word_regex(CLOCK)?,
            measurement: word_regex(MEASUREMENT)?,
        })
    }

    pub fn classify(&self, tokens: &[OcrToken]) -> TextAnnotation {
        let words = normalize_tokens(tokens);
        let w = Words::new(&words);
        let mut ann = TextAnnotation {
            tokens: tokens.to_vec(),
            raw_concatenation: w.joined.clone(),
            ..TextAnnotation::default()
        };
        let span = |field, words: [usize; 2]| MatchSpan {
            field,
            words,
            text: w.text(words).to_string(),
        };

        let mut hits: BTreeMap<PatternCategory, Vec<[usize; 2]>> = BTreeMap::new();
        for (cat, re) in &self.keywords {
            let found: Vec<[usize; 2]> = w.matches(re).into_iter().map(|(r, _)| r).collect();
            if !found.is_empty() {
                hits.insert(*cat, found);
            }
        }

        // laterality
        let right = hits.get(&PatternCategory::Right);
        let left = hits.get(&PatternCategory::Left);
        match (right, left) {
            (Some(r), None) => {
                ann.laterality = Laterality::Right;
                ann.spans.extend(r.iter().map(|&x| span(Field::Laterality, x)));
            }
            (None, Some(l)) => {
                ann.laterality = Laterality::Left;
                ann.spans.extend(l.iter().map(|&x| span(Field::Laterality, x)));
            }
            (Some(_), Some(_)) => ann
                .conflicts
                .push("laterality: both LEFT and RIGHT matched".into()),
            (None, None) => {}
        }

        // orientation; a match nested in a longer one of another kind yields
        let mut orient: Vec<(Orientation, [usize; 2])> = hits
            .iter()
            .filter_map(|(c, r)| c.orientation().map(|o| r.iter().map(move |&x| (o, x))))
            .flatten()
            .collect();
        let all = orient.clone();
        orient.retain(|(o, r)| {
            !all.iter().any(|(o2, r2)| {
                o2 != o && r2[0] <= r[0] && r[1] <= r2[1] && (r2[1] - r2[0]) > (r[1] - r[0])
            })
        });
        let mut kinds: Vec<Orientation> = orient.iter().map(|(o, _)| *o).collect();
        kinds.sort_by_key(|o| *o as u8);
        kinds.dedup();
        match kinds.as_slice() {
            [] => {}
            [only] => {
                ann.orientation = *only;
                ann.spans
                    .extend(orient.iter().map(|(_, r)| span(Field::Orientation, *r)));
            }
            many => ann
                .conflicts
                .push(format!("orientation: {} candidates {many:?}", many.len())),
        }

        if let Some(r) = hits.get(&PatternCategory::Axilla) {
            ann.axilla = true;
            ann.spans.extend(r.iter().map(|&x| span(Field::Axilla, x)));
        }
        if let Some(r) = hits.get(&PatternCategory::Procedural) {
            ann.procedural = true;
            ann.spans.extend(r.iter().map(|&x| span(Field::Procedural, x)));
        }

        let measurements: Vec<[usize; 2]> =
            w.matches(&self.measurement).into_iter().map(|(r, _)| r).collect();
        if !measurements.is_empty() {
            ann.lesion_measurement = true;
            ann.spans
                .extend(measurements.iter().map(|&r| span(Field::LesionMeasurement, r)));
        }

        // clock position
        let mut clocks: Vec<(ClockPosition, [usize; 2])> = Vec::new();
        for (r, caps) in w.matches(&self.clock) {
            let hour = caps.name("h").or(caps.name("h2")).expect("hour group");
            let minute = caps.name("min").map_or(0, |m| m.as_str().parse().unwrap_or(0));
            let hour: u8 = hour.as_str().parse().unwrap_or(0);
            clocks.push((ClockPosition { hour, minute }, r));
        }
        match distinct(&clocks) {
            Ok(Some(c)) => {
                ann.clock_position = Some(c);
                ann.spans
                    .extend(clocks.iter().map(|(_, r)| span(Field::ClockPosition, *r)));
            }
            Ok(None) => {}
            Err(n) => ann
                .conflicts
                .push(format!("clock_position: {n} different values")),
        }

        // distance from nipple: number + unit with a cue within two words
        let mut dists: Vec<(Distance, [usize; 2])> = Vec::new();
        for (r, caps) in w.matches(&self.number_unit) {
            if measurements.iter().any(|m| m[0] <= r[1] && r[0] <= m[1]) {
                continue;
            }
            if r[0] > 0 && matches!(words[r[0] - 1].as_str(), "X" | "*") {
                continue;
            }
            let value: f64 = caps["v"].parse().unwrap_or(0.0);
            if value <= 0.0 {
                continue;
            }
            let unit = if &caps["u"] == "CM" {
                DistanceUnit::Cm
            } else {
                DistanceUnit::Mm
            };
            if let Some(full) = self.cue_window(&words, r) {
                dists.push((Distance { value, unit }, full));
            }
        }
        match distinct(&dists) {
            Ok(Some(d)) => {
                ann.distance_from_nipple = Some(d);
                ann.spans
                    .extend(dists.iter().map(|(_, r)| span(Field::Distance, *r)));
            }
            Ok(None) => {}
            Err(n) => ann
                .conflicts
                .push(format!("distance_from_nipple: {n} different values")),
        }
        ann
    }

    /// Looks for a nipple cue made of whole words within two words after or
    /// before `r`; returns `r` widened to include it.
    fn cue_window(&self, words: &[String], r: [usize; 2]) -> Option<[usize; 2]> {
        let is_cue = |a: usize, b: usize| self.nipple_cue.is_match(&words[a..=b].join(" "));
        let n = words.len();
        let after = [(1, 1), (2, 2), (1, 2)];
        for (s, e) in after {
            let (a, b) = (r[1] + s, r[1] + e);
            if b < n && is_cue(a, b) {
                return Some([r[0], b]);
            }
        }
        for (s, e) in [(1, 1), (2, 2), (2, 1)] {
            if r[0] >= s {
                let (a, b) = (r[0] - s, r[0] - e);
                if is_cue(a, b) {
                    return Some([a, r[1]]);
                }
            }
        }
        None
    }
}

/// `Ok(value)` when all candidates agree, `Err(count)` of distinct values otherwise.
fn distinct<T: Copy + PartialEq>(items: &[(T, [usize; 2])]) -> Result<Option<T>, usize> {
    let mut seen: Vec<T> = Vec::new();
    for (v, _) in items {
        if !seen.contains(v) {
            seen.push(*v);
        }
    }
    match seen.len() {
        0 => Ok(None),
        1 => Ok(Some(seen[0])),
        n => Err(n),
    }
}

const TRIM: &[char] = &['(', ')', '[', ']', '{', '}', ',', ';', '"', '.', ':'];

/// Uppercases, splits on whitespace, strips enclosing punctuation and, in
/// numeric words, repairs O->0 and I/L->1.
pub fn normalize_tokens(tokens: &[OcrToken]) -> Vec<String> {
    tokens
        .iter()
        .flat_map(|t| {
            t.text
                .to_uppercase()
                .split_whitespace()
                .map(|w| numeric_repair(w.trim_matches(TRIM)))
                .filter(|w| !w.is_empty())
                .collect::<Vec<_>>()
        })
        .collect()
}

fn numeric_repair(word: &str) -> String {
    let (body, unit) = match word.len().checked_sub(2).map(|i| word.split_at(i)) {
        Some((b, u)) if (u == "CM" || u == "MM") && !b.is_empty() => (b, u),
        _ => (word, ""),
    };
    // a digit or a clock colon marks the word as numeric
    let numeric = body.chars().any(|c| c.is_ascii_digit() || c == ':')
        && body
            .chars()
            .all(|c| c.is_ascii_digit() || matches!(c, 'O' | 'I' | 'L' | '.' | ':' | 'X' | '*'));
    if !numeric {
        return word.to_string();
    }
    let fixed: String = body
        .chars()
        .map(|c| match c {
            'O' => '0',
            'I' | 'L' => '1',
            c => c,
        })
        .collect();
    fixed + unit
}

/// Classifies with the built-in grammar.
pub fn classify_annotation(tokens: &[OcrToken]) -> TextAnnotation {
    static DEFAULT: OnceLock<Grammar> = OnceLock::new();
    DEFAULT.get_or_init(Grammar::default).classify(tokens)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imgprim::BoundingBox;

    fn toks(words: &[&str]) -> Vec<OcrToken> {
        words
            .iter()
            .enumerate()
            .map(|(i, w)| {
                OcrToken::new(*w, BoundingBox::new(i * 20, 0, i * 20 + 10, 10).unwrap(), 0.9)
                    .unwrap()
            })
            .collect()
    }

    #[test]
    fn full_label() {
        let a = classify_annotation(&toks(&["RT", "BREAST", "10:00", "3", "CM", "FN"]));
        assert_eq!(a.laterality, Laterality::Right);
        assert_eq!(a.clock_position, Some(ClockPosition { hour: 10, minute: 0 }));
        assert_eq!(
            a.distance_from_nipple,
            Some(Distance { value: 3.0, unit: DistanceUnit::Cm })
        );
        assert!(!a.lesion_measurement && !a.axilla && !a.procedural);
        assert_eq!(a.raw_concatenation, "RT BREAST 10:00 3 CM FN");
    }

    #[test]
    fn split_antiradial_axilla() {
        let a = classify_annotation(&toks(&["ANTI", "RADIAL", "LT", "AXILLA"]));
        assert_eq!(a.orientation, Orientation::Antiradial);
        assert_eq!(a.laterality, Laterality::Left);
        assert!(a.axilla);
        assert!(a.conflicts.is_empty());
    }

    #[test]
    fn measurement_not_distance() {
        let a = classify_annotation(&toks(&["1.2", "X", "0.8", "CM"]));
        assert!(a.lesion_measurement);
        assert_eq!(a.distance_from_nipple, None);
        let a = classify_annotation(&toks(&["1.2X0.8CM", "FN"]));
        assert!(a.lesion_measurement);
        assert_eq!(a.distance_from_nipple, None);
    }

    #[test]
    fn procedural_terms() {
        let a = classify_annotation(&toks(&["US", "GUIDED", "BIOPSY", "CLIP", "PLACED"]));
        assert!(a.procedural);
        assert_eq!(a.laterality, Laterality::None);
    }

    #[test]
    fn laterality_conflict() {
        let a = classify_annotation(&toks(&["RT", "LT"]));
        assert_eq!(a.laterality, Laterality::None);
        assert_eq!(a.conflicts.len(), 1);
    }

    #[test]
    fn distance_needs_unit_and_cue() {
        assert_eq!(classify_annotation(&toks(&["2", "CM"])).distance_from_nipple, None);
        assert_eq!(classify_annotation(&toks(&["2", "FN"])).distance_from_nipple, None);
        let far = classify_annotation(&toks(&["2", "CM", "A", "B", "FN"]));
        assert_eq!(far.distance_from_nipple, None);
        let d = classify_annotation(&toks(&["FN", "4.5CM"])).distance_from_nipple.unwrap();
        assert_eq!((d.value, d.unit), (4.5, DistanceUnit::Cm));
        let d = classify_annotation(&toks(&["12", "MM", "FROM", "NIPPLE"]))
            .distance_from_nipple
            .unwrap();
        assert_eq!((d.value, d.unit), (12.0, DistanceUnit::Mm));
        assert_eq!(classify_annotation(&toks(&["0", "CM", "FN"])).distance_from_nipple, None);
    }

    #[test]
    fn clock_forms() {
        let c = |w: &[&str]| classify_annotation(&toks(w)).clock_position;
        assert_eq!(c(&["3", "O'CLOCK"]), Some(ClockPosition { hour: 3, minute: 0 }));
        assert_eq!(c(&["11OCLOCK"]), Some(ClockPosition { hour: 11, minute: 0 }));
        assert_eq!(c(&["12:30"]), Some(ClockPosition { hour: 12, minute: 30 }));
        assert_eq!(c(&["3"]), None);
        assert_eq!(c(&["13:00"]), None);
        assert_eq!(c(&["3:60"]), None);
        assert_eq!(c(&["LOQ"]), None);
    }

    #[test]
    fn ocr_confusions_in_numbers() {
        let a = classify_annotation(&toks(&["lO:OO", "rt"]));
        assert_eq!(a.clock_position, Some(ClockPosition { hour: 10, minute: 0 }));
        assert_eq!(a.laterality, Laterality::Right);
        // words without digits are left alone
        assert_eq!(normalize_tokens(&toks(&["OIL", "(LT)"])), ["OIL", "LT"]);
    }

    #[test]
    fn empty_input_matches_nothing() {
        let a = classify_annotation(&[]);
        assert_eq!(a, TextAnnotation::default());
    }

    #[test]
    fn overrides_replace_category() {
        let mut o = BTreeMap::new();
        o.insert(PatternCategory::Procedural, vec!["ABLATION".to_string()]);
        let g = Grammar::new(&o).unwrap();
        assert!(g.classify(&toks(&["ABLATION"])).procedural);
        assert!(!g.classify(&toks(&["BIOPSY"])).procedural);
        o.insert(PatternCategory::Axilla, vec!["(".to_string()]);
        assert!(Grammar::new(&o).is_err());
    }

    #[test]
    fn spans_reproduce_fields() {
        let a = classify_annotation(&toks(&[
            "LT", "2:00", "ANTI-RAD", "3.5", "CM", "FN", "AXILLA", "1.1", "*", "0.7", "WIRE",
        ]));
        assert!(!a.spans.is_empty());
        for s in &a.spans {
            let words: Vec<&str> = s.text.split(' ').collect();
            let b = classify_annotation(&toks(&words));
            let ok = match s.field {
                Field::Laterality => b.laterality == a.laterality,
                Field::Orientation => b.orientation == a.orientation,
                Field::Distance => b.distance_from_nipple == a.distance_from_nipple,
                Field::ClockPosition => b.clock_position == a.clock_position,
                Field::Axilla => b.axilla,
                Field::LesionMeasurement => b.lesion_measurement,
                Field::Procedural => b.procedural,
            };
            assert!(ok, "span {s:?}");
        }
    }

    #[test]
    fn permutation_keeps_flags() {
        let words = ["RT", "AX", "BIOPSY", "1", "X", "2", "SAG"];
        let base = classify_annotation(&toks(&words));
        let mut rev = words;
        rev.reverse();
        let r = classify_annotation(&toks(&rev));
        assert_eq!(
            (base.laterality, base.orientation, base.axilla, base.procedural),
            (r.laterality, r.orientation, r.axilla, r.procedural)
        );
    }
}
