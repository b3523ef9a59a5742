use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filters::{detect_indicator_shape, FilterConfig};
use crate::imgprim::{canny_edges, dilate, hsv_mask, to_grayscale, HsvRange, ScanImage};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DualViewConfig {
    pub width_height_min_ratio: f64,
    pub midline_edge_min: usize,
    pub neighbor_margin: usize,
    pub neighbor_offset: usize,
    pub canny_lo: f32,
    pub canny_hi: f32,
    /// Teal/green overlay colours that mark elastography frames.
    pub elastography_ranges: Vec<HsvRange>,
}

impl Default for DualViewConfig {
    fn default() -> Self {
        Self {
            width_height_min_ratio: 0.75,
            midline_edge_min: 100,
            neighbor_margin: 10,
            neighbor_offset: 10,
            canny_lo: 50.0,
            canny_hi: 150.0,
            elastography_ranges: vec![HsvRange {
                hue: [70.0, 200.0],
                sat: [0.25, 1.0],
                val: [0.30, 1.0],
            }],
        }
    }
}

impl DualViewConfig {
    pub fn validate(&self) -> Result<()> {
        if self.neighbor_offset == 0 {
            return Err(Error::Config("dualview.neighbor_offset must be >= 1".into()));
        }
        if !(0.0..=255.0).contains(&self.canny_lo) || self.canny_lo > self.canny_hi || self.canny_hi > 255.0 {
            return Err(Error::Config("dualview Canny thresholds need 0 <= lo <= hi <= 255".into()));
        }
        for r in &self.elastography_ranges {
            r.validate().map_err(|e| Error::Config(format!("dualview: {e}")))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DualView {
    pub flag: bool,
    pub split_x: Option<usize>,
}

impl DualView {
    const NO: DualView = DualView {
        flag: false,
        split_x: None,
    };
}

/// Columns compared by the midline test: the centre column(s) and one
/// neighbour `offset` columns beyond each side. Even widths have a two-column
/// centre `{w/2 - 1, w/2}`, which keeps the test symmetric under mirroring.
pub fn midline_columns(width: usize, offset: usize) -> (Vec<usize>, usize, usize) {
    let mid = width / 2;
    if width % 2 == 0 {
        (vec![mid - 1, mid], mid - 1 - offset, mid + offset)
    } else {
        (vec![mid], mid - offset, mid + offset)
    }
}

pub fn detect_dual_view(
    img: &ScanImage,
    cfg: &DualViewConfig,
    shape_cfg: &FilterConfig,
) -> Result<DualView> {
    let (w, h) = (img.width(), img.height());
    // even widths reach one column further left
    if w < 2 * cfg.neighbor_offset + 2 {
        return Err(Error::param(format!(
            "image width {w} too narrow for neighbour offset {}",
            cfg.neighbor_offset
        )));
    }
    if !img.is_gray() {
        let elasto = dilate(
            &hsv_mask(img, &cfg.elastography_ranges)?,
            shape_cfg.indicator_dilate_radius,
        );
        if detect_indicator_shape(&elasto, shape_cfg) {
            return Ok(DualView::NO);
        }
    }
    if (w as f64) < cfg.width_height_min_ratio * h as f64 {
        return Ok(DualView::NO);
    }
    let edges = canny_edges(&to_grayscale(img), cfg.canny_lo, cfg.canny_hi)?;
    let mut counts = vec![0usize; w];
    for y in 0..h {
        for (x, c) in counts.iter_mut().enumerate() {
            *c += edges.get(x, y) as usize;
        }
    }
    let (centre, left, right) = midline_columns(w, cfg.neighbor_offset);
    let c_mid = centre.iter().map(|&x| counts[x]).max().unwrap_or(0);
    let flag = c_mid > cfg.midline_edge_min
        && c_mid > cfg.neighbor_margin + counts[left]
        && c_mid > cfg.neighbor_margin + counts[right];
    Ok(DualView {
        flag,
        split_x: flag.then_some(w / 2),
    })
}

/// Splits into columns `[0, split_x)` and `[split_x, width)`.
pub fn split_dual_view(img: &ScanImage, split_x: usize) -> Result<(ScanImage, ScanImage)> {
    if split_x == 0 || split_x >= img.width() {
        return Err(Error::param(format!(
            "split column {split_x} outside (0, {})",
            img.width()
        )));
    }
    let h = img.height();
    let left = img.crop(&crate::BoundingBox::new(0, 0, split_x, h)?)?;
    let right = img.crop(&crate::BoundingBox::new(split_x, 0, img.width(), h)?)?;
    Ok((left, right))
}
