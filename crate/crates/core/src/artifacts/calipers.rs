use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imgprim::{
    dilate, edge_enhance, find_contours, hough_lines, threshold_above, to_grayscale, BinaryMask,
    BoundingBox, LineSegment, ScanImage,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum CaliperMethod {
    /// Edge-enhanced contours with a bounding-box size window.
    #[default]
    Contour,
    /// Contour method, falling back to intersecting Hough lines when no
    /// contour qualifies (markers joined by dotted spanning lines).
    ContourPlusHough,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CaliperConfig {
    pub border_mask_fraction: f64,
    pub box_min: usize,
    pub box_max: usize,
    pub dilate_radius: usize,
    pub method: CaliperMethod,
    pub hough_min_votes: usize,
    pub hough_min_len: usize,
    pub hough_max_gap: usize,
    pub intersection_angle_min: f64,
    /// Enhanced-image level above which a pixel counts as caliper edge.
    pub edge_threshold: u8,
    /// How far (px) an intersection may lie beyond either segment's ends.
    pub intersection_tolerance: f64,
}

impl Default for CaliperConfig {
    fn default() -> Self {
        Self {
            border_mask_fraction: 0.15,
            box_min: 10,
            box_max: 70,
            dilate_radius: 1,
            method: CaliperMethod::Contour,
            hough_min_votes: 30,
            hough_min_len: 25,
            hough_max_gap: 8,
            intersection_angle_min: 10.0,
            edge_threshold: 64,
            intersection_tolerance: 3.0,
        }
    }
}

impl CaliperConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..0.5).contains(&self.border_mask_fraction) {
            return Err(Error::Config(format!(
                "calipers.border_mask_fraction = {} is outside [0, 0.5)",
                self.border_mask_fraction
            )));
        }
        if self.box_min == 0 || self.box_min >= self.box_max {
            return Err(Error::Config(format!(
                "calipers box window needs 0 < box_min < box_max, got [{}, {}]",
                self.box_min, self.box_max
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaliperReport {
    pub present: bool,
    /// Caliper boxes in the coordinates of the analysed image; a Hough
    /// detection reports its intersection point as a 1x1 box.
    pub boxes: Vec<BoundingBox>,
    pub method_used: CaliperMethod,
}

impl CaliperReport {
    pub fn translate(mut self, dx: usize, dy: usize) -> Self {
        for b in &mut self.boxes {
            *b = b.translate(dx, dy);
        }
        self
    }
}

/// Region left after blacking out `fraction` of every dimension on each side.
pub fn unmasked_region(width: usize, height: usize, fraction: f64) -> Option<BoundingBox> {
    let x0 = (fraction * width as f64).ceil() as usize;
    let y0 = (fraction * height as f64).ceil() as usize;
    let x1 = ((1.0 - fraction) * width as f64).floor() as usize;
    let y1 = ((1.0 - fraction) * height as f64).floor() as usize;
    BoundingBox::new(x0, y0, x1, y1).ok()
}

/// Binary caliper-edge image: border masked, edge-enhanced, thresholded and dilated.
pub fn caliper_edge_mask(gray: &ScanImage, cfg: &CaliperConfig) -> Result<Option<(BinaryMask, BoundingBox)>> {
    let Some(interior) = unmasked_region(gray.width(), gray.height(), cfg.border_mask_fraction)
    else {
        return Ok(None);
    };
    let mut masked = gray.clone();
    let w = masked.width();
    for (i, v) in masked.data_mut().iter_mut().enumerate() {
        if !interior.contains(i % w, i / w) {
            *v = 0;
        }
    }
    let enhanced = edge_enhance(&masked)?;
    let mut edges = threshold_above(&enhanced, cfg.edge_threshold);
    edges.retain_within(&interior);
    let mut grown = dilate(&edges, cfg.dilate_radius);
    grown.retain_within(&interior);
    Ok(Some((grown, interior)))
}

pub fn detect_calipers(img: &ScanImage, cfg: &CaliperConfig) -> Result<CaliperReport> {
    let gray = to_grayscale(img);
    let mut report = CaliperReport {
        present: false,
        boxes: Vec::new(),
        method_used: cfg.method,
    };
    let Some((edges, interior)) = caliper_edge_mask(&gray, cfg)? else {
        return Ok(report);
    };

    let window = cfg.box_min..=cfg.box_max;
    report.boxes = find_contours(&edges)
        .into_iter()
        .filter(|c| window.contains(&c.bbox.width()) && window.contains(&c.bbox.height()))
        .map(|c| c.bbox)
        .collect();

    if report.boxes.is_empty() && cfg.method == CaliperMethod::ContourPlusHough {
        if let Some(p) = hough_caliper_point(&gray, &interior, cfg)? {
            report.boxes.push(p);
        }
    }
    report.present = !report.boxes.is_empty();
    Ok(report)
}

/// Line-pair fallback: runs on the enhanced image of the unmasked scan,
/// restricted to the interior, so the artificial border step never votes.
fn hough_caliper_point(
    gray: &ScanImage,
    interior: &BoundingBox,
    cfg: &CaliperConfig,
) -> Result<Option<BoundingBox>> {
    let enhanced = edge_enhance(gray)?;
    let mut edges = threshold_above(&enhanced, cfg.edge_threshold);
    edges.retain_within(interior);
    let segments = hough_lines(&edges, cfg.hough_min_votes, cfg.hough_min_len, cfg.hough_max_gap);
    Ok(intersecting_pair(&segments, interior, cfg).map(|(x, y)| BoundingBox::point(x, y)))
}

/// First pair (in detection order) of non-parallel segments whose crossing
/// lies inside `region` and on (or within tolerance of) both segments.
pub fn intersecting_pair(
    segments: &[LineSegment],
    region: &BoundingBox,
    cfg: &CaliperConfig,
) -> Option<(usize, usize)> {
    for (i, a) in segments.iter().enumerate() {
        for b in &segments[i + 1..] {
            if a.angle_between(b) < cfg.intersection_angle_min {
                continue;
            }
            let Some((x, y)) = a.line_intersection(b) else {
                continue;
            };
            if x < region.x_left as f64
                || y < region.y_top as f64
                || x >= region.x_right as f64
                || y >= region.y_bottom as f64
            {
                continue;
            }
            if a.distance_to((x, y)) <= cfg.intersection_tolerance
                && b.distance_to((x, y)) <= cfg.intersection_tolerance
            {
                return Some((x.floor() as usize, y.floor() as usize));
            }
        }
    }
    None
}
