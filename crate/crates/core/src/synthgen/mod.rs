//! Deterministic synthetic B-mode-like scenes with known ground truth.
//!
//! A scene is a speckle-textured scan area of a chosen shape on a black
//! canvas, with features painted on top in order. Rasterisation uses integer
//! arithmetic only, so identical specs give identical bytes everywhere.

mod corpus;
mod paint;
pub mod vocab;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::artifacts::{CaliperMethod, CaliperReport, DualView};
use crate::cropper::{CropResult, ShapeClass};
use crate::error::{Error, Result};
use crate::filters::{FilterTrigger, FilterVerdict};
use crate::font;
use crate::imgprim::{luma, BoundingBox, ScanImage};
use crate::pipeline::{ScanReport, Status};
use crate::textkx::{OcrToken, TextAnnotation};

pub use corpus::{
    corpus, dotted_caliper_scene, export_corpus, item_seed, clean_scene, scene_for_item,
    CorpusItem, Mix,
};
pub use vocab::TextExpect;

/// Gray level of white overlay marks (calipers, seams, text).
pub const MARK_VALUE: u8 = 250;
/// Caliper marker sizes that the default contour window must accept.
pub const DETECTABLE_MARKER: std::ops::RangeInclusive<usize> = 12..=66;
/// The enhanced-and-dilated footprint of a 1-px stroke grows by this much per side.
pub const MARKER_GROWTH: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ScanShape {
    Rectangular,
    Convex,
    Trapezoidal,
    Irregular,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum FeatureSpec {
    /// '+' marker of 1-px strokes, `size` px across.
    CaliperCross {
        center: (usize, usize),
        size: usize,
        #[serde(default)]
        negative: bool,
    },
    /// 'x' marker of 1-px diagonals, `size` px across.
    CaliperX {
        center: (usize, usize),
        size: usize,
        #[serde(default)]
        negative: bool,
    },
    /// Two crossing dotted measurement lines (3 px on, 4 px off) with 'x'
    /// markers at their ends. `dir_a`/`dir_b` are integer direction vectors.
    CaliperDottedLine {
        center: (usize, usize),
        dir_a: (i64, i64),
        dir_b: (i64, i64),
        half_len: usize,
        marker: usize,
    },
    /// Flow-highlighting ellipse inscribed in `rect`: red upper half, blue lower.
    DopplerPatch { rect: BoundingBox },
    /// 2-px green outline of `rect`.
    IndicatorRect { rect: BoundingBox },
    /// 2-px green line.
    SpanningLine {
        from: (usize, usize),
        to: (usize, usize),
    },
    /// White text lines in the bitmap font; `expect` holds the fields the
    /// lines are meant to encode.
    TextLabel {
        lines: Vec<String>,
        origin: (usize, usize),
        scale: usize,
        #[serde(default)]
        expect: TextExpect,
    },
    /// Splits a rectangular scan area into two independently textured panels
    /// joined by a bright 2-px seam starting at `mid` (even widths) or
    /// `mid + 1` (odd widths), `mid` being the centre column.
    DualSeam,
    /// Blacks out the scan area except a rim `rim` px wide.
    Blackout { rim: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub seed: u64,
    pub canvas: (usize, usize),
    pub scan_shape: ScanShape,
    /// Box the scan shape is fitted into.
    pub scan_box: BoundingBox,
    /// Per-pixel noise amplitude, as a fraction of 4 gray levels.
    pub speckle_level: f64,
    pub features: Vec<FeatureSpec>,
}

impl SceneSpec {
    pub fn is_color(&self) -> bool {
        self.features.iter().any(|f| {
            matches!(
                f,
                FeatureSpec::DopplerPatch { .. }
                    | FeatureSpec::IndicatorRect { .. }
                    | FeatureSpec::SpanningLine { .. }
            )
        })
    }

    pub fn validate(&self) -> Result<()> {
        let (w, h) = self.canvas;
        if w == 0 || h == 0 {
            return Err(Error::Spec("empty canvas".into()));
        }
        let canvas = BoundingBox::new(0, 0, w, h)?;
        let inside = |b: &BoundingBox, what: &str| {
            if canvas.contains_box(b) {
                Ok(())
            } else {
                Err(Error::Spec(format!("{what} {b:?} outside {w}x{h} canvas")))
            }
        };
        inside(&self.scan_box, "scan box")?;
        if self.scan_box.width() < 16 || self.scan_box.height() < 16 {
            return Err(Error::Spec("scan box smaller than 16 px".into()));
        }
        if !(0.0..=1.0).contains(&self.speckle_level) {
            return Err(Error::Spec("speckle_level outside [0, 1]".into()));
        }
        for f in &self.features {
            match f {
                FeatureSpec::CaliperCross {
                    center,
                    size,
                    negative,
                }
                | FeatureSpec::CaliperX {
                    center,
                    size,
                    negative,
                } => {
                    let detectable = size + 2 * MARKER_GROWTH;
                    let in_window = (10..=70).contains(&detectable);
                    if !negative && !DETECTABLE_MARKER.contains(size) {
                        return Err(Error::Spec(format!(
                            "marker size {size} outside the detectable band {DETECTABLE_MARKER:?}"
                        )));
                    }
                    if *negative && in_window {
                        return Err(Error::Spec(format!(
                            "negative marker size {size} would still be detected"
                        )));
                    }
                    inside(&marker_box(*center, *size)?, "marker")?;
                }
                FeatureSpec::CaliperDottedLine {
                    center,
                    dir_a,
                    dir_b,
                    half_len,
                    marker,
                } => {
                    if *dir_a == (0, 0) || *dir_b == (0, 0) {
                        return Err(Error::Spec("zero direction vector".into()));
                    }
                    for d in [dir_a, dir_b] {
                        for s in [-1i64, 1] {
                            let (ex, ey) = paint::along(*center, *d, s * *half_len as i64);
                            let m = *marker as i64 / 2 + 1;
                            if ex - m < 0 || ey - m < 0 || ex + m >= w as i64 || ey + m >= h as i64 {
                                return Err(Error::Spec("dotted line leaves the canvas".into()));
                            }
                        }
                    }
                }
                FeatureSpec::DopplerPatch { rect } => inside(rect, "doppler patch")?,
                FeatureSpec::IndicatorRect { rect } => inside(rect, "indicator box")?,
                FeatureSpec::SpanningLine { from, to } => {
                    if from.0 >= w || to.0 >= w || from.1 >= h || to.1 >= h {
                        return Err(Error::Spec("spanning line outside canvas".into()));
                    }
                }
                FeatureSpec::TextLabel {
                    lines,
                    origin,
                    scale,
                    ..
                } => {
                    if *scale == 0 {
                        return Err(Error::Spec("text scale 0".into()));
                    }
                    for (i, line) in lines.iter().enumerate() {
                        if let Some(c) = line.chars().find(|&c| !font::is_renderable(c)) {
                            return Err(Error::Spec(format!("character {c:?} has no glyph")));
                        }
                        let (tw, th) = font::text_size(line, *scale);
                        let y = origin.1 + i * line_pitch(*scale);
                        if origin.0 + tw > w || y + th > h {
                            return Err(Error::Spec(format!("text line {line:?} leaves the canvas")));
                        }
                    }
                }
                FeatureSpec::DualSeam => {
                    if self.scan_shape != ScanShape::Rectangular {
                        return Err(Error::Spec("dual seam needs a rectangular scan area".into()));
                    }
                }
                FeatureSpec::Blackout { rim } => {
                    if 2 * rim + 2 >= self.scan_box.width().min(self.scan_box.height()) {
                        return Err(Error::Spec(format!("blackout rim {rim} leaves no interior")));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Vertical distance between text line tops.
pub fn line_pitch(scale: usize) -> usize {
    (font::GLYPH_H + 3) * scale
}

fn marker_box(center: (usize, usize), size: usize) -> Result<BoundingBox> {
    let half = size / 2;
    if center.0 < half || center.1 < half {
        return Err(Error::Spec(format!("marker at {center:?} crosses the canvas edge")));
    }
    BoundingBox::new(
        center.0 - half,
        center.1 - half,
        center.0 - half + size,
        center.1 - half + size,
    )
}

/// Expected detector outcomes for a rendered scene.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub source_id: String,
    pub width: usize,
    pub height: usize,
    /// Extent of the rendered scan area.
    pub scan_box: BoundingBox,
    pub shape: ScanShape,
    pub invalid: bool,
    /// Share of scan-box pixels darker than 5.
    pub black_fraction: f64,
    pub non_b_mode: bool,
    pub trigger: FilterTrigger,
    /// Share of scan-box pixels painted in a flow colour.
    pub color_fraction: f64,
    /// Expected caliper boxes (stroke extent grown by [`MARKER_GROWTH`]).
    pub calipers: Vec<BoundingBox>,
    pub dual_view_split: Option<usize>,
    pub tokens: Vec<OcrToken>,
    pub text: TextExpect,
}

impl GroundTruth {
    pub fn text_present(&self) -> bool {
        crate::textkx::detect_text_presence(&self.tokens)
    }

    /// The truth as a manifest record, for direct diffing and scoring.
    pub fn to_report(&self) -> ScanReport {
        let t = &self.text;
        ScanReport {
            source_id: self.source_id.clone(),
            width: self.width,
            height: self.height,
            status: Status::Ok,
            crop: Some(CropResult {
                stage1_box: self.scan_box,
                final_box: self.scan_box,
                shape_class: if self.shape == ScanShape::Rectangular && !self.invalid {
                    ShapeClass::Rectangular
                } else {
                    ShapeClass::Refined
                },
                mode_value: 0,
            }),
            filter: Some(FilterVerdict {
                invalid: self.invalid,
                non_b_mode: self.non_b_mode,
                black_fraction: self.black_fraction,
                color_fraction: self.color_fraction,
                trigger: self.trigger,
            }),
            dual_view: Some(DualView {
                flag: self.dual_view_split.is_some(),
                split_x: self.dual_view_split,
            }),
            calipers: Some(CaliperReport {
                present: !self.calipers.is_empty(),
                boxes: self.calipers.clone(),
                method_used: CaliperMethod::Contour,
            }),
            text_present: Some(self.text_present()),
            text: Some(TextAnnotation {
                tokens: self.tokens.clone(),
                laterality: t.laterality,
                orientation: t.orientation,
                distance_from_nipple: t.distance_from_nipple,
                clock_position: t.clock_position,
                axilla: t.axilla,
                lesion_measurement: t.lesion_measurement,
                procedural: t.procedural,
                raw_concatenation: self
                    .tokens
                    .iter()
                    .map(|k| k.text.as_str())
                    .collect::<Vec<_>>()
                    .join(" "),
                ..TextAnnotation::default()
            }),
            ..ScanReport::default()
        }
    }
}

/// Renders a scene; `source_id` names the image and its truth record.
pub fn render(spec: &SceneSpec, source_id: &str) -> Result<(ScanImage, GroundTruth)> {
    spec.validate()?;
    let (w, h) = spec.canvas;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let shape = paint::shape_mask(spec.scan_shape, &spec.scan_box, w, h);
    let scan_box = shape
        .extent()
        .ok_or_else(|| Error::Spec("scan shape rasterised to nothing".into()))?;
    let noise = (spec.speckle_level * 4.0).round() as i32;

    let mut gray = vec![0u8; w * h];
    let dual_mid = spec
        .features
        .iter()
        .any(|f| matches!(f, FeatureSpec::DualSeam))
        .then(|| scan_box.x_left + scan_box.width() / 2);
    let left = paint::texture(w, h, &mut rng);
    let right = match dual_mid {
        Some(_) => paint::texture(w, h, &mut rng),
        None => Vec::new(),
    };
    for y in 0..h {
        for x in 0..w {
            if !shape.get(x, y) {
                continue;
            }
            let base = match dual_mid {
                Some(mid) if x >= mid => right[y * w + x],
                _ => left[y * w + x],
            };
            let n = if noise > 0 { rng.random_range(-noise..=noise) } else { 0 };
            gray[y * w + x] = (base + n).clamp(20, 200) as u8;
        }
    }

    let channels = if spec.is_color() { 3 } else { 1 };
    let data = if channels == 3 {
        gray.iter().flat_map(|&v| [v, v, v]).collect()
    } else {
        gray
    };
    let mut img = ScanImage::new(w, h, channels, data, source_id)?;
    let white: &[u8] = if channels == 3 { &[MARK_VALUE; 3] } else { &[MARK_VALUE] };

    let mut truth = GroundTruth {
        source_id: source_id.to_string(),
        width: w,
        height: h,
        scan_box,
        shape: spec.scan_shape,
        invalid: false,
        black_fraction: 0.0,
        non_b_mode: false,
        trigger: if channels == 1 {
            FilterTrigger::GrayPass
        } else {
            FilterTrigger::None
        },
        color_fraction: 0.0,
        calipers: Vec::new(),
        dual_view_split: None,
        tokens: Vec::new(),
        text: TextExpect::default(),
    };
    let mut flow_pixels = 0usize;
    let mut indicator = false;

    for f in &spec.features {
        match f {
            FeatureSpec::CaliperCross {
                center,
                size,
                negative,
            } => {
                let b = paint::cross(&mut img, *center, *size, white);
                if !negative {
                    truth.calipers.push(grow(&b, MARKER_GROWTH));
                }
            }
            FeatureSpec::CaliperX {
                center,
                size,
                negative,
            } => {
                let b = paint::x_marker(&mut img, *center, *size, white);
                if !negative {
                    truth.calipers.push(grow(&b, MARKER_GROWTH));
                }
            }
            FeatureSpec::CaliperDottedLine {
                center,
                dir_a,
                dir_b,
                half_len,
                marker,
            } => {
                let mut b: Option<BoundingBox> = None;
                for d in [dir_a, dir_b] {
                    let lb = paint::dotted_line(&mut img, *center, *d, *half_len, *marker, white);
                    b = Some(b.map_or(lb, |acc| union(&acc, &lb)));
                }
                if let Some(b) = b {
                    truth.calipers.push(grow(&b, MARKER_GROWTH));
                }
            }
            FeatureSpec::DopplerPatch { rect } => {
                flow_pixels += paint::doppler(&mut img, rect);
            }
            FeatureSpec::IndicatorRect { rect } => {
                flow_pixels += paint::outline(&mut img, rect, paint::GREEN);
                indicator = true;
            }
            FeatureSpec::SpanningLine { from, to } => {
                flow_pixels += paint::thick_line(&mut img, *from, *to, paint::GREEN);
                indicator = true;
            }
            FeatureSpec::TextLabel {
                lines,
                origin,
                scale,
                expect,
            } => {
                let text_value: &[u8] = if channels == 3 { &[255; 3] } else { &[255] };
                for (i, line) in lines.iter().enumerate() {
                    let y = origin.1 + i * line_pitch(*scale);
                    let mut col = 0usize;
                    for word in line.split(' ') {
                        let x = origin.0 + col * font::ADVANCE * scale;
                        if let Some(b) = font::draw_text(&mut img, word, x, y, *scale, text_value) {
                            truth.tokens.push(OcrToken::new(word, b, 1.0)?);
                        }
                        col += word.chars().count() + 1;
                    }
                }
                truth.text.merge(expect);
            }
            FeatureSpec::DualSeam => {
                let mid = dual_mid.expect("dual seam sets the midline");
                // the seam's left step must fall on the column the detector
                // inspects: mid - 1 for even widths, mid for odd ones
                let start = mid + scan_box.width() % 2;
                for y in scan_box.y_top..scan_box.y_bottom {
                    for x in start..start + 2 {
                        img.set_pixel(x, y, white);
                    }
                }
                truth.dual_view_split = Some(mid);
            }
            FeatureSpec::Blackout { rim } => {
                let inner = paint::erode_mask(&shape, *rim);
                let black: &[u8] = if channels == 3 { &[0; 3] } else { &[0] };
                for y in 0..h {
                    for x in 0..w {
                        if inner.get(x, y) {
                            img.set_pixel(x, y, black);
                        }
                    }
                }
            }
        }
    }

    let area = scan_box.area() as f64;
    let mut dark = 0usize;
    for y in scan_box.y_top..scan_box.y_bottom {
        for x in scan_box.x_left..scan_box.x_right {
            let p = img.pixel(x, y);
            let v = if channels == 3 { luma(p[0], p[1], p[2]) } else { p[0] };
            dark += (v < 5) as usize;
        }
    }
    truth.black_fraction = dark as f64 / area;
    truth.invalid = truth.black_fraction > 0.75;
    truth.color_fraction = flow_pixels as f64 / area;
    if channels == 3 {
        truth.trigger = if indicator {
            FilterTrigger::IndicatorShape
        } else if truth.color_fraction > 0.005 {
            FilterTrigger::ColorArea
        } else {
            FilterTrigger::None
        };
        truth.non_b_mode = truth.trigger != FilterTrigger::None;
    }
    crate::textkx::reading_order(&mut truth.tokens);
    Ok((img, truth))
}

fn grow(b: &BoundingBox, by: usize) -> BoundingBox {
    BoundingBox {
        x_left: b.x_left.saturating_sub(by),
        y_top: b.y_top.saturating_sub(by),
        x_right: b.x_right + by,
        y_bottom: b.y_bottom + by,
    }
}

fn union(a: &BoundingBox, b: &BoundingBox) -> BoundingBox {
    BoundingBox {
        x_left: a.x_left.min(b.x_left),
        y_top: a.y_top.min(b.y_top),
        x_right: a.x_right.max(b.x_right),
        y_bottom: a.y_bottom.max(b.y_bottom),
    }
}
