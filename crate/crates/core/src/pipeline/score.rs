use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::report::{ScanReport, Status};
use crate::textkx::{Laterality, Orientation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    Invalid,
    NonBMode,
    Calipers,
    DualView,
    TextPresent,
    Laterality,
    Orientation,
    ClockPosition,
    Distance,
    Axilla,
    Measurement,
    Procedural,
}

impl Category {
    pub const ALL: [Category; 12] = [
        Category::Invalid,
        Category::NonBMode,
        Category::Calipers,
        Category::DualView,
        Category::TextPresent,
        Category::Laterality,
        Category::Orientation,
        Category::ClockPosition,
        Category::Distance,
        Category::Axilla,
        Category::Measurement,
        Category::Procedural,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Category::Invalid => "invalid",
            Category::NonBMode => "non_b_mode",
            Category::Calipers => "calipers",
            Category::DualView => "dual_view",
            Category::TextPresent => "text_present",
            Category::Laterality => "laterality",
            Category::Orientation => "orientation",
            Category::ClockPosition => "clock_position",
            Category::Distance => "distance",
            Category::Axilla => "axilla",
            Category::Measurement => "measurement",
            Category::Procedural => "procedural",
        }
    }

    /// `None` for a negative; `Some(value)` for a positive, where the value
    /// must also match for valued fields. Missing stage output reads negative.
    pub fn label(self, r: &ScanReport) -> Option<String> {
        let flag = |b: bool| b.then(String::new);
        let text = r.text.as_ref();
        match self {
            Category::Invalid => r.filter.and_then(|f| flag(f.invalid)),
            Category::NonBMode => r.filter.and_then(|f| flag(f.non_b_mode)),
            Category::Calipers => r.calipers.as_ref().and_then(|c| flag(c.present)),
            Category::DualView => r.dual_view.and_then(|d| flag(d.flag)),
            Category::TextPresent => r.text_present.and_then(flag),
            Category::Laterality => text
                .filter(|t| t.laterality != Laterality::None)
                .map(|t| format!("{:?}", t.laterality)),
            Category::Orientation => text
                .filter(|t| t.orientation != Orientation::None)
                .map(|t| format!("{:?}", t.orientation)),
            Category::ClockPosition => text
                .and_then(|t| t.clock_position)
                .map(|c| format!("{}:{:02}", c.hour, c.minute)),
            Category::Distance => text
                .and_then(|t| t.distance_from_nipple)
                .map(|d| format!("{} {:?}", d.value, d.unit)),
            Category::Axilla => text.and_then(|t| flag(t.axilla)),
            Category::Measurement => text.and_then(|t| flag(t.lesion_measurement)),
            Category::Procedural => text.and_then(|t| flag(t.procedural)),
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Confusion cells. A positive predicted with the wrong value counts as a
/// false negative, so the four cells always sum to the number scored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl Confusion {
    pub fn new(tp: usize, fp: usize, tn: usize, fn_: usize) -> Self {
        Self { tp, fp, tn, fn_ }
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    /// TP / (TP + FN); `None` when there are no positives.
    pub fn sensitivity(&self) -> Option<f64> {
        ratio(self.tp, self.tp + self.fn_)
    }

    /// TN / (TN + FP); `None` when there are no negatives.
    pub fn specificity(&self) -> Option<f64> {
        ratio(self.tn, self.tn + self.fp)
    }

    pub fn add(&mut self, truth: Option<&str>, predicted: Option<&str>) {
        match (truth, predicted) {
            (Some(t), Some(p)) if t == p => self.tp += 1,
            (Some(_), _) => self.fn_ += 1,
            (None, Some(_)) => self.fp += 1,
            (None, None) => self.tn += 1,
        }
    }
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RunSummary {
    pub n: usize,
    pub decode_errors: usize,
    pub ocr_skipped: usize,
    /// Records flagged positive, per category.
    pub counts: BTreeMap<Category, usize>,
    /// Present only when scored against ground truth.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub confusion: Option<BTreeMap<Category, Confusion>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub unmatched: Vec<String>,
}

impl RunSummary {
    pub fn add(&mut self, r: &ScanReport) {
        self.n += 1;
        match r.status {
            Status::DecodeError => self.decode_errors += 1,
            Status::OcrSkipped => self.ocr_skipped += 1,
            Status::Ok => {}
        }
        for c in Category::ALL {
            let e = self.counts.entry(c).or_default();
            *e += c.label(r).is_some() as usize;
        }
    }

    pub fn from_reports<'a>(reports: impl IntoIterator<Item = &'a ScanReport>) -> Self {
        let mut s = Self::default();
        for r in reports {
            s.add(r);
        }
        s
    }

    pub fn confusion_for(&self, c: Category) -> Option<Confusion> {
        self.confusion.as_ref().and_then(|m| m.get(&c).copied())
    }
}

/// Scores manifest records against truth records matched by `source_id`.
/// Ids present on only one side are listed in `unmatched` and excluded.
pub fn score(manifest: &[ScanReport], truth: &[ScanReport]) -> RunSummary {
    let by_id: HashMap<&str, &ScanReport> =
        truth.iter().map(|t| (t.source_id.as_str(), t)).collect();
    let mut matched_truth = std::collections::HashSet::new();
    let mut summary = RunSummary::default();
    let mut cells: BTreeMap<Category, Confusion> =
        Category::ALL.iter().map(|&c| (c, Confusion::default())).collect();
    for r in manifest {
        let Some(t) = by_id.get(r.source_id.as_str()) else {
            summary.unmatched.push(r.source_id.clone());
            continue;
        };
        matched_truth.insert(r.source_id.as_str());
        summary.add(r);
        for (c, cell) in cells.iter_mut() {
            cell.add(c.label(t).as_deref(), c.label(r).as_deref());
        }
    }
    for t in truth {
        if !matched_truth.contains(t.source_id.as_str()) {
            summary.unmatched.push(t.source_id.clone());
        }
    }
    summary.confusion = Some(cells);
    summary
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filters::FilterVerdict;
    use crate::textkx::TextAnnotation;

    fn record(id: &str, invalid: bool, lat: Laterality) -> ScanReport {
        ScanReport {
            source_id: id.into(),
            filter: Some(FilterVerdict {
                invalid,
                ..FilterVerdict::default()
            }),
            text: Some(TextAnnotation {
                laterality: lat,
                ..TextAnnotation::default()
            }),
            ..ScanReport::default()
        }
    }

    #[test]
    fn identical_sets_score_perfectly() {
        let truth = vec![
            record("a", true, Laterality::Left),
            record("b", false, Laterality::None),
        ];
        let s = score(&truth, &truth);
        let inv = s.confusion_for(Category::Invalid).unwrap();
        assert_eq!((inv.sensitivity(), inv.specificity()), (Some(1.0), Some(1.0)));
        // no positives at all: undefined, not zero
        assert_eq!(s.confusion_for(Category::Axilla).unwrap().sensitivity(), None);
    }

    #[test]
    fn all_negative_predictions() {
        let truth = vec![
            record("a", true, Laterality::Left),
            record("b", false, Laterality::None),
        ];
        let pred = vec![
            record("a", false, Laterality::None),
            record("b", false, Laterality::None),
        ];
        let inv = score(&pred, &truth).confusion_for(Category::Invalid).unwrap();
        assert_eq!((inv.sensitivity(), inv.specificity()), (Some(0.0), Some(1.0)));
    }

    #[test]
    fn wrong_value_is_false_negative() {
        let truth = vec![record("a", false, Laterality::Left)];
        let pred = vec![record("a", false, Laterality::Right)];
        let c = score(&pred, &truth).confusion_for(Category::Laterality).unwrap();
        assert_eq!(c, Confusion::new(0, 0, 0, 1));
    }

    #[test]
    fn unmatched_ids_are_listed_and_excluded() {
        let truth = vec![record("a", true, Laterality::None), record("c", true, Laterality::None)];
        let pred = vec![record("a", true, Laterality::None), record("b", true, Laterality::None)];
        let s = score(&pred, &truth);
        assert_eq!(s.unmatched, vec!["b".to_string(), "c".to_string()]);
        for c in Category::ALL {
            assert_eq!(s.confusion_for(c).unwrap().total(), 1);
        }
    }

    #[test]
    fn cells_sum_to_n() {
        let truth: Vec<_> = (0..20)
            .map(|i| record(&i.to_string(), i % 3 == 0, Laterality::None))
            .collect();
        let pred: Vec<_> = (0..20)
            .map(|i| record(&i.to_string(), i % 2 == 0, Laterality::Left))
            .collect();
        let s = score(&pred, &truth);
        for c in Category::ALL {
            assert_eq!(s.confusion_for(c).unwrap().total(), 20);
        }
    }
}
