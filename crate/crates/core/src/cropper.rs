//! Scan-area identification.
//!
//! Stage 1 thresholds against the most frequent gray level, opens the mask
//! and keeps the bounding box of the largest component. Stage 2 tightens
//! non-rectangular areas (convex, trapezoidal, irregular) by taking, per
//! axis, the median of the extrema found in three equal slices of the box.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imgprim::{
    dilate, erode, label_components, to_grayscale, BinaryMask, BoundingBox, ScanImage,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CropConfig {
    pub threshold_offset: u8,
    pub morph_radius: usize,
    pub rect_fill_ratio: f64,
    pub enable_stage2: bool,
    /// Below this share of mode-valued pixels the frame is treated as having
    /// no background at all (e.g. an image that is already cropped), and the
    /// whole frame is the scan area.
    pub min_background_share: f64,
}

impl Default for CropConfig {
    fn default() -> Self {
        Self {
            threshold_offset: 10,
            morph_radius: 2,
            rect_fill_ratio: 0.98,
            enable_stage2: true,
            min_background_share: 0.05,
        }
    }
}

impl CropConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rect_fill_ratio > 0.0 && self.rect_fill_ratio <= 1.0) {
            return Err(Error::Config(format!(
                "crop.rect_fill_ratio = {} is outside (0, 1]",
                self.rect_fill_ratio
            )));
        }
        if !(0.0..=1.0).contains(&self.min_background_share) {
            return Err(Error::Config("crop.min_background_share must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ShapeClass {
    Rectangular,
    Refined,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CropResult {
    pub stage1_box: BoundingBox,
    pub final_box: BoundingBox,
    pub shape_class: ShapeClass,
    pub mode_value: u8,
}

#[derive(Debug, Clone)]
pub struct Stage1 {
    pub stage1_box: BoundingBox,
    /// Thresholded and opened foreground mask over the whole frame.
    pub mask: BinaryMask,
    pub mode_value: u8,
    /// Pixels in the component that defined `stage1_box` (0 when none).
    pub component_pixels: usize,
}

/// Most frequent value; ties go to the smaller value.
pub fn mode_value(gray: &ScanImage) -> (u8, usize) {
    let mut hist = [0usize; 256];
    for &v in gray.data() {
        hist[v as usize] += 1;
    }
    let mut best = (0u8, hist[0]);
    for (v, &c) in hist.iter().enumerate().skip(1) {
        if c > best.1 {
            best = (v as u8, c);
        }
    }
    best
}

pub fn stage1_crop(img: &ScanImage, cfg: &CropConfig) -> Result<Stage1> {
    if !img.is_gray() {
        return Err(Error::Precondition("stage1_crop needs a 1-channel image".into()));
    }
    let (w, h) = (img.width(), img.height());
    let (mode, mode_count) = mode_value(img);
    let full = img.bounds();

    if (mode_count as f64) < cfg.min_background_share * (w * h) as f64 {
        let mask = BinaryMask::from_bits(w, h, vec![true; w * h])?;
        return Ok(Stage1 {
            stage1_box: full,
            mask,
            mode_value: mode,
            component_pixels: w * h,
        });
    }

    let level = mode.saturating_add(cfg.threshold_offset);
    let raw = BinaryMask::from_bits(w, h, img.data().iter().map(|&v| v > level).collect())?;
    let mask = dilate(&erode(&raw, cfg.morph_radius), cfg.morph_radius);

    let labeling = label_components(&mask);
    let largest = labeling
        .components
        .iter()
        .max_by(|a, b| a.pixel_count.cmp(&b.pixel_count).then(b.id.cmp(&a.id)));
    let (stage1_box, component_pixels) = match largest {
        Some(c) => (c.bbox, c.pixel_count),
        None => (full, 0),
    };
    Ok(Stage1 {
        stage1_box,
        mask,
        mode_value: mode,
        component_pixels,
    })
}

/// Splits `[lo, hi)` into three slices at `lo + len/3` and `lo + 2*len/3`
/// (integer floor); the last slice absorbs the remainder.
pub fn thirds(lo: usize, hi: usize) -> [(usize, usize); 3] {
    let len = hi - lo;
    let a = lo + len / 3;
    let b = lo + 2 * len / 3;
    [(lo, a), (a, b), (b, hi)]
}

/// Median of up to three values; two values average (floor), one is itself.
fn median(values: &mut Vec<usize>) -> Option<usize> {
    values.sort_unstable();
    match values.len() {
        0 => None,
        1 => Some(values[0]),
        2 => Some((values[0] + values[1]) / 2),
        _ => Some(values[1]),
    }
}

pub fn stage2_refine(mask: &BinaryMask, stage1_box: &BoundingBox) -> Result<BoundingBox> {
    let frame = BoundingBox::new(0, 0, mask.width(), mask.height())?;
    if !frame.contains_box(stage1_box) {
        return Err(Error::param(format!(
            "stage-1 box {stage1_box:?} exceeds mask {}x{}",
            mask.width(),
            mask.height()
        )));
    }
    let b = *stage1_box;

    let (mut lefts, mut rights) = (Vec::with_capacity(3), Vec::with_capacity(3));
    for (y0, y1) in thirds(b.y_top, b.y_bottom) {
        let mut extent: Option<(usize, usize)> = None;
        for y in y0..y1 {
            for x in b.x_left..b.x_right {
                if mask.get(x, y) {
                    extent = Some(match extent {
                        Some((lo, hi)) => (lo.min(x), hi.max(x)),
                        None => (x, x),
                    });
                }
            }
        }
        if let Some((lo, hi)) = extent {
            lefts.push(lo);
            rights.push(hi);
        }
    }

    let (mut tops, mut bottoms) = (Vec::with_capacity(3), Vec::with_capacity(3));
    for (x0, x1) in thirds(b.x_left, b.x_right) {
        let mut rows = (b.y_top..b.y_bottom).filter(|&y| (x0..x1).any(|x| mask.get(x, y)));
        if let Some(top) = rows.next() {
            tops.push(top);
            bottoms.push(rows.last().unwrap_or(top));
        }
    }

    let x_left = median(&mut lefts).unwrap_or(b.x_left).max(b.x_left);
    let x_right = median(&mut rights)
        .map(|v| v + 1)
        .unwrap_or(b.x_right)
        .min(b.x_right);
    let y_top = median(&mut tops).unwrap_or(b.y_top).max(b.y_top);
    let y_bottom = median(&mut bottoms)
        .map(|v| v + 1)
        .unwrap_or(b.y_bottom)
        .min(b.y_bottom);
    BoundingBox::new(x_left, y_top, x_right, y_bottom)
}

pub fn crop_scan(img: &ScanImage, cfg: &CropConfig) -> Result<CropResult> {
    let gray = to_grayscale(img);
    let s1 = stage1_crop(&gray, cfg)?;
    let filled = s1.component_pixels as f64 >= cfg.rect_fill_ratio * s1.stage1_box.area() as f64;
    let (final_box, shape_class) = if filled || !cfg.enable_stage2 {
        (s1.stage1_box, ShapeClass::Rectangular)
    } else {
        (stage2_refine(&s1.mask, &s1.stage1_box)?, ShapeClass::Refined)
    };
    Ok(CropResult {
        stage1_box: s1.stage1_box,
        final_box,
        shape_class,
        mode_value: s1.mode_value,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn canvas(w: usize, h: usize, f: impl Fn(usize, usize) -> u8) -> ScanImage {
        let mut data = Vec::with_capacity(w * h);
        for y in 0..h {
            for x in 0..w {
                data.push(f(x, y));
            }
        }
        ScanImage::new(w, h, 1, data, "").unwrap()
    }

    #[test]
    fn centred_rectangle() {
        let img = canvas(400, 300, |x, y| {
            if (100..300).contains(&x) && (100..200).contains(&y) {
                200
            } else {
                0
            }
        });
        let r = crop_scan(&img, &CropConfig::default()).unwrap();
        assert_eq!(r.stage1_box, BoundingBox::new(100, 100, 300, 200).unwrap());
        assert_eq!(r.final_box, r.stage1_box);
        assert_eq!(r.shape_class, ShapeClass::Rectangular);
        assert_eq!(r.mode_value, 0);
    }

    #[test]
    fn uniform_image_is_full_frame() {
        let img = ScanImage::filled_gray(50, 40, 77);
        let s1 = stage1_crop(&img, &CropConfig::default()).unwrap();
        assert!(s1.mask.is_empty());
        assert_eq!(s1.stage1_box, img.bounds());
        let r = crop_scan(&img, &CropConfig::default()).unwrap();
        assert_eq!(r.final_box, img.bounds());
    }

    #[test]
    fn largest_component_wins() {
        // 1000-px block and 50-px block
        let img = canvas(200, 200, |x, y| {
            let big = (10..50).contains(&x) && (10..35).contains(&y);
            let small = (150..160).contains(&x) && (150..155).contains(&y);
            if big || small {
                180
            } else {
                0
            }
        });
        let s1 = stage1_crop(&img, &CropConfig::default()).unwrap();
        assert_eq!(s1.component_pixels, 1000);
        assert_eq!(s1.stage1_box, BoundingBox::new(10, 10, 50, 35).unwrap());
    }

    #[test]
    fn mode_ties_to_smaller() {
        let img = ScanImage::new(4, 1, 1, vec![9, 9, 3, 3], "").unwrap();
        assert_eq!(mode_value(&img), (3, 2));
    }

    #[test]
    fn filled_rectangle_mask_is_fixed_point() {
        let mask = BinaryMask::from_fn(50, 40, |x, y| (5..45).contains(&x) && (3..30).contains(&y));
        let b = BoundingBox::new(5, 3, 45, 30).unwrap();
        assert_eq!(stage2_refine(&mask, &b).unwrap(), b);
    }

    #[test]
    fn empty_mask_keeps_box() {
        let b = BoundingBox::new(2, 2, 10, 10).unwrap();
        assert_eq!(stage2_refine(&BinaryMask::new(12, 12), &b).unwrap(), b);
    }

    #[test]
    fn trapezoid_uses_middle_slice() {
        // bottom width 100, top width 60, height 90
        let (x0, y0, bw, bh) = (20usize, 10usize, 100usize, 90usize);
        let mask = BinaryMask::from_fn(140, 110, |x, y| {
            if y < y0 || y >= y0 + bh {
                return false;
            }
            let t = (y - y0) as f64 / (bh - 1) as f64;
            let half = 30.0 + 20.0 * t;
            let c = x0 as f64 + bw as f64 / 2.0;
            (x as f64 + 0.5 - c).abs() <= half
        });
        let b = mask.extent().unwrap();
        let r = stage2_refine(&mask, &b).unwrap();
        let [_, mid, _] = thirds(b.y_top, b.y_bottom);
        let m = &mask;
        let mid_min = (mid.0..mid.1)
            .flat_map(|y| (0..140).filter(move |&x| m.get(x, y)))
            .min()
            .unwrap();
        assert_eq!(r.x_left, mid_min);
        assert!(r.x_left > b.x_left);
        assert!(r.x_right < b.x_right);
    }

    #[test]
    fn thirds_absorb_remainder() {
        assert_eq!(thirds(10, 20), [(10, 13), (13, 16), (16, 20)]);
        assert_eq!(thirds(0, 2), [(0, 0), (0, 1), (1, 2)]);
    }

    #[test]
    fn already_cropped_frame_has_no_background() {
        // speckle-like ramp with no dominant value
        let img = canvas(120, 90, |x, y| (40 + (x * 7 + y * 13) % 150) as u8);
        let r = crop_scan(&img, &CropConfig::default()).unwrap();
        assert_eq!(r.final_box, img.bounds());
    }
}
