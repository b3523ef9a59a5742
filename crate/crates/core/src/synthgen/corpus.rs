use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::vocab::{self, Phrase, PhraseKind, TextExpect};
use super::{line_pitch, render, FeatureSpec, GroundTruth, ScanShape, SceneSpec};
use crate::error::Result;
use crate::font;
use crate::imgprim::{BoundingBox, ScanImage};

/// Per-image probabilities of each scene property. Text-field entries are
/// conditional on the image carrying text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Mix {
    pub calipers: f64,
    pub invalid: f64,
    pub dual_view: f64,
    pub non_b_mode: f64,
    pub text: f64,
    pub laterality: f64,
    pub orientation: f64,
    pub distance: f64,
    pub clock: f64,
    pub axilla: f64,
    pub measurement: f64,
    pub procedural: f64,
}

impl Default for Mix {
    /// Proportions of the clinical test set the detectors were tuned on
    /// (430 images; text fields relative to the 398 with text).
    fn default() -> Self {
        Self {
            calipers: 89.0 / 430.0,
            invalid: 2.0 / 430.0,
            dual_view: 4.0 / 430.0,
            non_b_mode: 10.0 / 430.0,
            text: 398.0 / 430.0,
            laterality: 374.0 / 398.0,
            orientation: 296.0 / 398.0,
            distance: 273.0 / 398.0,
            clock: 54.0 / 398.0,
            axilla: 166.0 / 398.0,
            measurement: 80.0 / 398.0,
            procedural: 31.0 / 398.0,
        }
    }
}

impl Mix {
    pub fn none() -> Self {
        Self {
            calipers: 0.0,
            invalid: 0.0,
            dual_view: 0.0,
            non_b_mode: 0.0,
            text: 0.0,
            laterality: 0.0,
            orientation: 0.0,
            distance: 0.0,
            clock: 0.0,
            axilla: 0.0,
            measurement: 0.0,
            procedural: 0.0,
        }
    }

    pub fn all_calipers() -> Self {
        Self {
            calipers: 1.0,
            ..Self::none()
        }
    }

    fn probabilities(&self) -> [f64; 12] {
        [
            self.calipers,
            self.invalid,
            self.dual_view,
            self.non_b_mode,
            self.text,
            self.laterality,
            self.orientation,
            self.distance,
            self.clock,
            self.axilla,
            self.measurement,
            self.procedural,
        ]
    }
}

const PRIMES: [f64; 12] = [2.0, 3.0, 5.0, 7.0, 11.0, 13.0, 17.0, 19.0, 23.0, 29.0, 31.0, 37.0];

/// Which properties item `index` carries. Each property follows its own
/// Weyl sequence `frac(i * sqrt(p) + offset)`, so every prefix of the corpus
/// holds each property in proportion, within one item.
fn flags(seed: u64, index: usize, mix: &Mix) -> [bool; 12] {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = [false; 12];
    for (k, p) in mix.probabilities().iter().enumerate() {
        let offset = (rng.random::<u64>() >> 11) as f64 / (1u64 << 53) as f64;
        let alpha = PRIMES[k].sqrt().fract();
        let u = (index as f64 * alpha + offset).fract();
        out[k] = u < *p;
    }
    out
}

/// Seed for item `index`; independent of the corpus size.
pub fn item_seed(seed: u64, index: usize) -> u64 {
    let mut z = seed ^ (index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn item_id(seed: u64, index: usize) -> String {
    format!("synth-{seed}-{index:06}")
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusItem {
    pub id: String,
    pub spec: SceneSpec,
}

fn frac_of(v: usize, num: usize, den: usize) -> usize {
    v * num / den
}

fn base_layout(rng: &mut ChaCha8Rng, shape: ScanShape) -> (usize, usize, BoundingBox) {
    let w = rng.random_range(400..=480);
    let h = rng.random_range(360..=420);
    let x0 = rng.random_range(16..=40);
    let x1 = w - rng.random_range(16..=40);
    let y0 = rng.random_range(70..=80);
    let y1 = h - rng.random_range(10..=24);
    let _ = shape;
    (w, h, BoundingBox { x_left: x0, y_top: y0, x_right: x1, y_bottom: y1 })
}

fn random_shape(rng: &mut ChaCha8Rng) -> ScanShape {
    match rng.random_range(0..100) {
        0..55 => ScanShape::Rectangular,
        55..70 => ScanShape::Convex,
        70..85 => ScanShape::Trapezoidal,
        _ => ScanShape::Irregular,
    }
}

fn pick<'a>(rng: &mut ChaCha8Rng, items: &'a [Phrase]) -> &'a Phrase {
    &items[rng.random_range(0..items.len())]
}

/// Packs phrases into at most `max_lines` lines of `max_chars`; phrases that
/// do not fit are dropped. Returns the lines and the fields they encode.
fn layout_text(phrases: &[Phrase], max_chars: usize, max_lines: usize) -> (Vec<String>, TextExpect) {
    let mut lines: Vec<String> = Vec::new();
    let mut expect = TextExpect::default();
    for p in phrases {
        let fits_last = lines
            .last()
            .is_some_and(|l| l.len() + 1 + p.text.len() <= max_chars);
        if fits_last {
            let l = lines.last_mut().expect("checked");
            l.push(' ');
            l.push_str(&p.text);
        } else if lines.len() < max_lines && p.text.len() <= max_chars {
            lines.push(p.text.clone());
        } else {
            continue;
        }
        expect.merge(&p.expect);
    }
    (lines, expect)
}

/// The scene for item `index` of `corpus(seed, _, mix)`.
pub fn scene_for_item(seed: u64, index: usize, mix: &Mix) -> CorpusItem {
    let [calipers, invalid, dual, non_b, text, lat, orient, dist, clock, axilla, measure, proc] =
        flags(seed, index, mix);
    let (calipers, dual, non_b) = (calipers && !invalid, dual && !invalid, non_b && !invalid);
    let mut rng = ChaCha8Rng::seed_from_u64(item_seed(seed, index));
    let shape = if dual {
        ScanShape::Rectangular
    } else {
        random_shape(&mut rng)
    };
    let (w, h, sb) = base_layout(&mut rng, shape);
    let (bw, bh) = (sb.width(), sb.height());
    let cx = sb.x_left + bw / 2;
    let mut features = Vec::new();

    if invalid {
        features.push(FeatureSpec::Blackout {
            rim: rng.random_range(8..=14),
        });
    }
    if dual {
        features.push(FeatureSpec::DualSeam);
    }
    if non_b {
        let rx = rng.random_range(40..=60);
        let ry = rng.random_range(14..=28);
        let band_lo = sb.y_top + frac_of(bh, 14, 100) + 6;
        let band_hi = sb.y_top + frac_of(bh, 36, 100) - 6;
        let cy = band_lo + ry + rng.random_range(0..=(band_hi - band_lo).saturating_sub(2 * ry).max(0));
        let pcx = cx + rng.random_range(0..=20) - 10;
        let rect = BoundingBox {
            x_left: pcx - rx,
            y_top: cy - ry,
            x_right: pcx + rx,
            y_bottom: cy + ry,
        };
        features.push(FeatureSpec::DopplerPatch { rect });
        if rng.random_bool(0.3) {
            features.push(FeatureSpec::IndicatorRect {
                rect: BoundingBox {
                    x_left: rect.x_left - 5,
                    y_top: rect.y_top - 5,
                    x_right: rect.x_right + 5,
                    y_bottom: rect.y_bottom + 5,
                },
            });
        }
    }
    if calipers {
        let size = rng.random_range(12..=36);
        let cross = rng.random_bool(0.5);
        let two = rng.random_bool(0.8);
        let y_lo = sb.y_top + frac_of(bh, 42, 100) + size / 2;
        let y_hi = (sb.y_top + frac_of(bh, 66, 100)).saturating_sub(size / 2).max(y_lo);
        let cy = rng.random_range(y_lo..=y_hi);
        let centers: Vec<usize> = if dual {
            let off = size / 2 + 10 + rng.random_range(0..=30);
            if two {
                vec![cx - off, cx + off]
            } else {
                vec![cx - off]
            }
        } else {
            let max_sep = frac_of(bw, 35, 100);
            let sep = rng.random_range(size + 12..=max_sep.max(size + 12));
            let c = cx + rng.random_range(0..=20) - 10;
            if two {
                vec![c - sep / 2, c - sep / 2 + sep]
            } else {
                vec![c]
            }
        };
        for x in centers {
            let center = (x, cy);
            features.push(if cross {
                FeatureSpec::CaliperCross {
                    center,
                    size,
                    negative: false,
                }
            } else {
                FeatureSpec::CaliperX {
                    center,
                    size,
                    negative: false,
                }
            });
        }
    }
    if text {
        let wanted = [
            (lat, PhraseKind::Laterality),
            (clock, PhraseKind::Clock),
            (dist, PhraseKind::Distance),
            (orient, PhraseKind::Orientation),
            (axilla, PhraseKind::Axilla),
            (measure, PhraseKind::Measurement),
            (proc, PhraseKind::Procedural),
        ];
        let mut chosen: Vec<Phrase> = wanted
            .iter()
            .filter(|(on, _)| *on)
            .map(|(_, k)| pick(&mut rng, &vocab::phrases(*k)).clone())
            .collect();
        if chosen.is_empty() || rng.random_bool(0.3) {
            chosen.push(pick(&mut rng, &vocab::filler_phrases()).clone());
        }
        chosen.shuffle(&mut rng);
        let scale = 2;
        let max_chars = (w - 20) / (font::ADVANCE * scale);
        let max_lines = (sb.y_top - 10) / line_pitch(scale);
        let (lines, expect) = layout_text(&chosen, max_chars, max_lines);
        features.push(FeatureSpec::TextLabel {
            lines,
            origin: (10, 6),
            scale,
            expect,
        });
    }

    CorpusItem {
        id: item_id(seed, index),
        spec: SceneSpec {
            seed: item_seed(seed, index) ^ 0x5eed,
            canvas: (w, h),
            scan_shape: shape,
            scan_box: sb,
            speckle_level: 0.5,
            features,
        },
    }
}

/// `n` rendered scenes; item `i` depends only on `(seed, i, mix)`, so the
/// corpus is prefix-stable.
pub fn corpus(seed: u64, n: usize, mix: &Mix) -> Result<Vec<(ScanImage, GroundTruth)>> {
    (0..n)
        .map(|i| {
            let item = scene_for_item(seed, i, mix);
            render(&item.spec, &item.id)
        })
        .collect()
}

/// Crossing dotted measurement lines in the middle of a plain scan area.
pub fn dotted_caliper_scene(seed: u64, index: usize) -> CorpusItem {
    const DIRS: [(i64, i64); 6] = [(5, 2), (3, 1), (4, 3), (2, 1), (5, 3), (6, 1)];
    let mut rng = ChaCha8Rng::seed_from_u64(item_seed(seed ^ 0xd077, index));
    let shape = if rng.random_bool(0.5) {
        ScanShape::Rectangular
    } else {
        ScanShape::Trapezoidal
    };
    let (w, h, sb) = base_layout(&mut rng, shape);
    let mut d = DIRS[rng.random_range(0..DIRS.len())];
    if rng.random_bool(0.5) {
        d.1 = -d.1;
    }
    let center = (
        sb.x_left + sb.width() / 2 + rng.random_range(0..=16) - 8,
        sb.y_top + sb.height() / 2 + rng.random_range(0..=16) - 8,
    );
    CorpusItem {
        id: format!("dotted-{seed}-{index:04}"),
        spec: SceneSpec {
            seed: item_seed(seed ^ 0xd077, index),
            canvas: (w, h),
            scan_shape: shape,
            scan_box: sb,
            speckle_level: 0.5,
            features: vec![FeatureSpec::CaliperDottedLine {
                center,
                dir_a: d,
                dir_b: (-d.1, d.0),
                half_len: rng.random_range(55..=75),
                marker: 7,
            }],
        },
    }
}

/// Featureless scan area of a random shape.
pub fn clean_scene(seed: u64, index: usize) -> CorpusItem {
    let mut rng = ChaCha8Rng::seed_from_u64(item_seed(seed ^ 0xc1ea, index));
    let shape = random_shape(&mut rng);
    let (w, h, sb) = base_layout(&mut rng, shape);
    CorpusItem {
        id: format!("clean-{seed}-{index:04}"),
        spec: SceneSpec {
            seed: item_seed(seed ^ 0xc1ea, index),
            canvas: (w, h),
            scan_shape: shape,
            scan_box: sb,
            speckle_level: 0.5,
            features: Vec::new(),
        },
    }
}

/// Writes `<id>.png` per scene and `truth.jsonl` (one manifest-shaped record
/// per scene) into `dir`. Returns the number of scenes written.
pub fn export_corpus(seed: u64, n: usize, mix: &Mix, dir: &Path) -> Result<usize> {
    std::fs::create_dir_all(dir)?;
    let mut truth = BufWriter::new(File::create(dir.join("truth.jsonl"))?);
    for i in 0..n {
        let item = scene_for_item(seed, i, mix);
        let (img, gt) = render(&item.spec, &item.id)?;
        img.save_png(&dir.join(format!("{}.png", item.id)))?;
        serde_json::to_writer(&mut truth, &gt.to_report())?;
        truth.write_all(b"\n")?;
    }
    truth.flush()?;
    Ok(n)
}
