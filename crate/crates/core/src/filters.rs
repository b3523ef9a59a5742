//! Scan filtering: invalid (mostly black) scans and non-B-mode scans
//! (blood-flow highlighting, elastography).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imgprim::{
    approx_polygon, dilate, find_contours, hough_lines, hsv_mask, to_grayscale, BinaryMask,
    BoundingBox, HsvRange, LineSegment, ScanImage,
};

/// Distance within which a horizontal and a vertical segment end must meet
/// to count as the corner of a partial rectangle.
pub const RIGHT_ANGLE_PROXIMITY: f64 = 15.0;
/// Douglas-Peucker tolerance as a fraction of the contour perimeter.
pub const POLY_APPROX_FRACTION: f64 = 0.02;
/// Slack, in degrees, for a segment to count as axis-aligned.
const AXIS_TOLERANCE_DEG: f64 = 3.0;
/// Share of pixels that must be near-gray for the early B-mode exit.
const GRAY_PIXEL_SHARE: f64 = 0.999;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum FilterTrigger {
    /// Decided B-mode at the grayscale check.
    GrayPass,
    IndicatorShape,
    ColorArea,
    #[default]
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct FilterVerdict {
    pub invalid: bool,
    pub non_b_mode: bool,
    pub black_fraction: f64,
    pub color_fraction: f64,
    pub trigger: FilterTrigger,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterConfig {
    pub invalid_black_level: u8,
    pub invalid_threshold: f64,
    pub color_area_threshold: f64,
    pub doppler_ranges: Vec<HsvRange>,
    pub indicator_ranges: Vec<HsvRange>,
    pub indicator_dilate_radius: usize,
    pub grayscale_tolerance: u8,
    pub rect_min_side_fraction: f64,
    pub span_fraction: f64,
}

fn hsv(hue: [f32; 2], sat: [f32; 2], val: [f32; 2]) -> HsvRange {
    HsvRange { hue, sat, val }
}

/// Red, orange, yellow, green and blue flow-highlighting palettes.
pub fn default_doppler_ranges() -> Vec<HsvRange> {
    vec![
        hsv([345.0, 15.0], [0.45, 1.0], [0.35, 1.0]),
        hsv([15.0, 45.0], [0.45, 1.0], [0.35, 1.0]),
        hsv([45.0, 70.0], [0.45, 1.0], [0.35, 1.0]),
        hsv([70.0, 160.0], [0.30, 1.0], [0.30, 1.0]),
        hsv([190.0, 260.0], [0.45, 1.0], [0.35, 1.0]),
    ]
}

/// Indicator-box green.
pub fn default_indicator_green() -> HsvRange {
    hsv([70.0, 160.0], [0.25, 1.0], [0.40, 1.0])
}

/// Indicator-box white.
pub fn default_indicator_white() -> HsvRange {
    hsv([0.0, 360.0], [0.0, 0.10], [0.90, 1.0])
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            invalid_black_level: 5,
            invalid_threshold: 0.75,
            color_area_threshold: 0.005,
            doppler_ranges: default_doppler_ranges(),
            indicator_ranges: vec![default_indicator_green(), default_indicator_white()],
            indicator_dilate_radius: 2,
            grayscale_tolerance: 8,
            rect_min_side_fraction: 0.05,
            span_fraction: 0.6,
        }
    }
}

impl FilterConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("invalid_threshold", self.invalid_threshold),
            ("color_area_threshold", self.color_area_threshold),
            ("rect_min_side_fraction", self.rect_min_side_fraction),
            ("span_fraction", self.span_fraction),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Config(format!("filters.{name} = {v} is outside [0, 1]")));
            }
        }
        for r in self.doppler_ranges.iter().chain(&self.indicator_ranges) {
            r.validate().map_err(|e| Error::Config(format!("filters: {e}")))?;
        }
        Ok(())
    }
}

/// Flags a scan as invalid when more than `invalid_threshold` of `scan_area`
/// (whole image when `None`) is darker than `invalid_black_level`.
pub fn detect_invalid(
    img: &ScanImage,
    cfg: &FilterConfig,
    scan_area: Option<BoundingBox>,
) -> Result<FilterVerdict> {
    let area = match scan_area {
        Some(b) => {
            if !img.bounds().contains_box(&b) {
                return Err(Error::param(format!(
                    "scan area {b:?} exceeds image {}x{}",
                    img.width(),
                    img.height()
                )));
            }
            b
        }
        None => img.bounds(),
    };
    let gray = to_grayscale(img);
    let w = gray.width();
    let data = gray.data();
    let mut black = 0usize;
    for y in area.y_top..area.y_bottom {
        let row = &data[y * w + area.x_left..y * w + area.x_right];
        black += row.iter().filter(|&&v| v < cfg.invalid_black_level).count();
    }
    let black_fraction = black as f64 / area.area() as f64;
    Ok(FilterVerdict {
        invalid: black_fraction > cfg.invalid_threshold,
        black_fraction,
        ..FilterVerdict::default()
    })
}

/// `true` when nearly every pixel has a channel spread within tolerance.
pub fn is_effectively_gray(img: &ScanImage, tolerance: u8) -> bool {
    if img.is_gray() {
        return true;
    }
    let n = img.width() * img.height();
    let gray = img
        .data()
        .chunks_exact(3)
        .filter(|p| {
            let hi = p[0].max(p[1]).max(p[2]);
            let lo = p[0].min(p[1]).min(p[2]);
            hi - lo <= tolerance
        })
        .count();
    gray as f64 >= GRAY_PIXEL_SHARE * n as f64
}

/// Four-step non-B-mode test: grayscale exit, colour masks, indicator
/// shapes, then flow-highlighting area.
pub fn detect_non_b_mode(img: &ScanImage, cfg: &FilterConfig) -> Result<FilterVerdict> {
    if is_effectively_gray(img, cfg.grayscale_tolerance) {
        return Ok(FilterVerdict {
            trigger: FilterTrigger::GrayPass,
            ..FilterVerdict::default()
        });
    }
    let doppler = hsv_mask(img, &cfg.doppler_ranges)?;
    let color_fraction = doppler.count() as f64 / (img.width() * img.height()) as f64;
    let indicator = dilate(
        &hsv_mask(img, &cfg.indicator_ranges)?,
        cfg.indicator_dilate_radius,
    );

    let trigger = if detect_indicator_shape(&indicator, cfg) {
        FilterTrigger::IndicatorShape
    } else if color_fraction > cfg.color_area_threshold {
        FilterTrigger::ColorArea
    } else {
        FilterTrigger::None
    };
    Ok(FilterVerdict {
        non_b_mode: trigger != FilterTrigger::None,
        color_fraction,
        trigger,
        ..FilterVerdict::default()
    })
}

/// Which indicator geometry matched.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IndicatorShape {
    CompleteRectangle,
    PartialRectangle,
    SpanningLine,
}

pub fn detect_indicator_shape(mask: &BinaryMask, cfg: &FilterConfig) -> bool {
    classify_indicator_shape(mask, cfg).is_some()
}

pub fn classify_indicator_shape(mask: &BinaryMask, cfg: &FilterConfig) -> Option<IndicatorShape> {
    if mask.is_empty() {
        return None;
    }
    if has_complete_rectangle(mask, cfg) {
        return Some(IndicatorShape::CompleteRectangle);
    }
    let segments = indicator_segments(mask, cfg);
    if has_partial_rectangle(&segments, mask, cfg) {
        return Some(IndicatorShape::PartialRectangle);
    }
    if has_spanning_line(&segments, mask, cfg) {
        return Some(IndicatorShape::SpanningLine);
    }
    None
}

fn min_sides(mask: &BinaryMask, cfg: &FilterConfig) -> (f64, f64) {
    (
        cfg.rect_min_side_fraction * mask.width() as f64,
        cfg.rect_min_side_fraction * mask.height() as f64,
    )
}

pub fn has_complete_rectangle(mask: &BinaryMask, cfg: &FilterConfig) -> bool {
    let (min_w, min_h) = min_sides(mask, cfg);
    find_contours(mask).iter().any(|c| {
        if (c.bbox.width() as f64) < min_w || (c.bbox.height() as f64) < min_h {
            return false;
        }
        approx_polygon(&c.points, POLY_APPROX_FRACTION * c.perimeter()).len() == 4
    })
}

pub fn indicator_segments(mask: &BinaryMask, cfg: &FilterConfig) -> Vec<LineSegment> {
    let (min_w, min_h) = min_sides(mask, cfg);
    let min_len = min_w.min(min_h).floor().max(2.0) as usize;
    hough_lines(mask, (min_len / 2).max(10), min_len, 3)
}

fn is_horizontal(s: &LineSegment) -> bool {
    let a = s.angle_deg();
    a <= AXIS_TOLERANCE_DEG || a >= 180.0 - AXIS_TOLERANCE_DEG
}

fn is_vertical(s: &LineSegment) -> bool {
    (s.angle_deg() - 90.0).abs() <= AXIS_TOLERANCE_DEG
}

pub fn has_partial_rectangle(
    segments: &[LineSegment],
    mask: &BinaryMask,
    cfg: &FilterConfig,
) -> bool {
    let (min_w, min_h) = min_sides(mask, cfg);
    let horizontal: Vec<&LineSegment> = segments
        .iter()
        .filter(|s| is_horizontal(s) && s.dx().abs() >= min_w)
        .collect();
    let vertical: Vec<&LineSegment> = segments
        .iter()
        .filter(|s| is_vertical(s) && s.dy().abs() >= min_h)
        .collect();
    let close = |a: (usize, usize), b: (usize, usize)| {
        (a.0 as f64 - b.0 as f64).hypot(a.1 as f64 - b.1 as f64) <= RIGHT_ANGLE_PROXIMITY
    };
    horizontal.iter().any(|h| {
        vertical.iter().any(|v| {
            [h.p0, h.p1]
                .iter()
                .any(|&he| [v.p0, v.p1].iter().any(|&ve| close(he, ve)))
        })
    })
}

pub fn has_spanning_line(segments: &[LineSegment], mask: &BinaryMask, cfg: &FilterConfig) -> bool {
    let need_h = cfg.span_fraction * mask.height() as f64;
    let need_w = cfg.span_fraction * mask.width() as f64;
    segments
        .iter()
        .any(|s| s.dy().abs() >= need_h || s.dx().abs() >= need_w)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gray_with_black(n_black: usize) -> ScanImage {
        let mut data = vec![100u8; 10_000];
        for v in data.iter_mut().take(n_black) {
            *v = 0;
        }
        ScanImage::new(100, 100, 1, data, "").unwrap()
    }

    #[test]
    fn all_black_is_invalid() {
        let img = ScanImage::filled_gray(100, 100, 0);
        let v = detect_invalid(&img, &FilterConfig::default(), None).unwrap();
        assert!(v.invalid);
        assert_eq!(v.black_fraction, 1.0);
    }

    #[test]
    fn invalid_boundary_is_strict() {
        let cfg = FilterConfig::default();
        assert!(!detect_invalid(&gray_with_black(7500), &cfg, None).unwrap().invalid);
        assert!(detect_invalid(&gray_with_black(7501), &cfg, None).unwrap().invalid);
    }

    #[test]
    fn black_level_is_strict() {
        // value 5 is not "less than five"
        let img = ScanImage::filled_gray(10, 10, 5);
        let v = detect_invalid(&img, &FilterConfig::default(), None).unwrap();
        assert_eq!(v.black_fraction, 0.0);
        let img = ScanImage::filled_gray(10, 10, 4);
        assert!(detect_invalid(&img, &FilterConfig::default(), None).unwrap().invalid);
    }

    #[test]
    fn invalid_respects_scan_area() {
        let img = gray_with_black(5000); // top half black
        let cfg = FilterConfig::default();
        let top = BoundingBox::new(0, 0, 100, 50).unwrap();
        assert!(detect_invalid(&img, &cfg, Some(top)).unwrap().invalid);
        let outside = BoundingBox::new(0, 0, 101, 50).unwrap();
        assert!(detect_invalid(&img, &cfg, Some(outside)).is_err());
    }

    #[test]
    fn gray_image_is_b_mode() {
        let cfg = FilterConfig::default();
        let g = ScanImage::filled_gray(50, 50, 90);
        let v = detect_non_b_mode(&g, &cfg).unwrap();
        assert!(!v.non_b_mode);
        assert_eq!(v.trigger, FilterTrigger::GrayPass);
        let rgb_gray = ScanImage::filled_rgb(50, 50, [90, 93, 88]);
        assert!(!detect_non_b_mode(&rgb_gray, &cfg).unwrap().non_b_mode);
    }

    fn paint(img: &mut ScanImage, x0: usize, y0: usize, x1: usize, y1: usize, rgb: [u8; 3]) {
        for y in y0..y1 {
            for x in x0..x1 {
                img.set_pixel(x, y, &rgb);
            }
        }
    }

    #[test]
    fn doppler_patch_triggers_color_area() {
        let cfg = FilterConfig::default();
        let mut img = ScanImage::filled_rgb(100, 100, [80, 80, 80]);
        // 1% of the area, half red half blue
        paint(&mut img, 10, 10, 15, 20, [220, 20, 20]);
        paint(&mut img, 15, 10, 20, 20, [20, 40, 220]);
        let v = detect_non_b_mode(&img, &cfg).unwrap();
        assert!(v.non_b_mode);
        assert_eq!(v.trigger, FilterTrigger::ColorArea);
        assert!((v.color_fraction - 0.01).abs() < 1e-12);
    }

    #[test]
    fn color_area_boundary_excluded() {
        let cfg = FilterConfig::default();
        let mut img = ScanImage::filled_rgb(100, 100, [80, 80, 80]);
        paint(&mut img, 10, 10, 20, 15, [220, 20, 20]); // 50 px = 0.5%
        let v = detect_non_b_mode(&img, &cfg).unwrap();
        assert!(!v.non_b_mode, "{v:?}");
        img.set_pixel(50, 50, &[220, 20, 20]); // 51 px
        let v = detect_non_b_mode(&img, &cfg).unwrap();
        assert_eq!(v.trigger, FilterTrigger::ColorArea);
    }

    #[test]
    fn green_box_outline_triggers_indicator() {
        let cfg = FilterConfig::default();
        let mut img = ScanImage::filled_rgb(200, 160, [70, 70, 70]);
        let green = [30, 200, 40];
        paint(&mut img, 40, 30, 140, 32, green);
        paint(&mut img, 40, 110, 140, 112, green);
        paint(&mut img, 40, 30, 42, 112, green);
        paint(&mut img, 138, 30, 140, 112, green);
        let v = detect_non_b_mode(&img, &cfg).unwrap();
        assert!(v.non_b_mode);
        assert_eq!(v.trigger, FilterTrigger::IndicatorShape);
    }

    #[test]
    fn indicator_shapes() {
        let cfg = FilterConfig::default();
        assert!(!detect_indicator_shape(&BinaryMask::new(100, 100), &cfg));

        let mut line = BinaryMask::new(200, 150);
        for y in 0..150 {
            line.set(120, y, true);
            line.set(121, y, true);
        }
        let line = dilate(&line, 2);
        let segs = indicator_segments(&line, &cfg);
        assert!(has_spanning_line(&segs, &line, &cfg));
        assert!(!has_complete_rectangle(&line, &cfg));
        assert!(detect_indicator_shape(&line, &cfg));

        // three sides of a box covering 30% of the frame: top, left, right
        let (w, h) = (300, 200);
        let mut open = BinaryMask::new(w, h);
        let (x0, x1, y0, y1) = (80, 80 + 164, 40, 40 + 110);
        for x in x0..x1 {
            open.set(x, y0, true);
            open.set(x, y0 + 1, true);
        }
        for y in y0..y1 {
            for x in [x0, x0 + 1, x1 - 2, x1 - 1] {
                open.set(x, y, true);
            }
        }
        let open = dilate(&open, 2);
        let segs = indicator_segments(&open, &cfg);
        assert!(has_partial_rectangle(&segs, &open, &cfg), "{segs:?}");
        assert!(detect_indicator_shape(&open, &cfg));
    }

    #[test]
    fn small_blob_is_not_indicator() {
        let cfg = FilterConfig::default();
        let mut m = BinaryMask::new(200, 200);
        for y in 50..55 {
            for x in 50..55 {
                m.set(x, y, true);
            }
        }
        assert!(!detect_indicator_shape(&m, &cfg));
    }

    #[test]
    fn config_validation() {
        let mut cfg = FilterConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.invalid_threshold = 1.5;
        assert!(cfg.validate().is_err());
    }
}
