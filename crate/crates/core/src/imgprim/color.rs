use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imgprim::{BinaryMask, ScanImage};

/// Converts to a single luma channel using 0.299R + 0.587G + 0.114B, rounded.
/// Gray input is returned unchanged.
pub fn to_grayscale(img: &ScanImage) -> ScanImage {
    if img.is_gray() {
        return img.clone();
    }
    let data = img.data().chunks_exact(3).map(|p| luma(p[0], p[1], p[2])).collect();
    ScanImage::new(img.width(), img.height(), 1, data, img.source_id()).expect("same dims")
}

#[inline]
pub fn luma(r: u8, g: u8, b: u8) -> u8 {
    ((299 * r as u32 + 587 * g as u32 + 114 * b as u32 + 500) / 1000) as u8
}

/// Hue in degrees `[0, 360)`, saturation and value in `[0, 1]`.
/// Achromatic pixels report hue 0.
pub fn rgb_to_hsv(r: u8, g: u8, b: u8) -> (f32, f32, f32) {
    let (rf, gf, bf) = (r as f32, g as f32, b as f32);
    let max = rf.max(gf).max(bf);
    let min = rf.min(gf).min(bf);
    let delta = max - min;
    let v = max / 255.0;
    let s = if max > 0.0 { delta / max } else { 0.0 };
    if delta == 0.0 {
        return (0.0, s, v);
    }
    let mut h = if max == rf {
        60.0 * ((gf - bf) / delta)
    } else if max == gf {
        60.0 * ((bf - rf) / delta + 2.0)
    } else {
        60.0 * ((rf - gf) / delta + 4.0)
    };
    if h < 0.0 {
        h += 360.0;
    }
    if h >= 360.0 {
        h -= 360.0;
    }
    (h, s, v)
}

/// Inclusive HSV box. `hue_lo > hue_hi` wraps through 0° (e.g. 350°..10°).
/// `[0, 360]` covers every hue.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HsvRange {
    pub hue: [f32; 2],
    pub sat: [f32; 2],
    pub val: [f32; 2],
}

impl HsvRange {
    pub fn new(hue: [f32; 2], sat: [f32; 2], val: [f32; 2]) -> Result<Self> {
        let r = Self { hue, sat, val };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        let in_deg = |d: f32| (0.0..=360.0).contains(&d);
        let in_unit = |u: f32| (0.0..=1.0).contains(&u);
        if !in_deg(self.hue[0]) || !in_deg(self.hue[1]) {
            return Err(Error::param(format!("hue bounds {:?} outside [0, 360]", self.hue)));
        }
        if !self.sat.iter().chain(&self.val).all(|&u| in_unit(u)) {
            return Err(Error::param("saturation/value bounds must lie in [0, 1]"));
        }
        if self.sat[0] > self.sat[1] || self.val[0] > self.val[1] {
            return Err(Error::param("saturation/value lower bound exceeds upper bound"));
        }
        Ok(())
    }

    #[inline]
    pub fn contains(&self, h: f32, s: f32, v: f32) -> bool {
        let hue_ok = if self.hue[0] <= self.hue[1] {
            h >= self.hue[0] && h <= self.hue[1]
        } else {
            h >= self.hue[0] || h <= self.hue[1]
        };
        hue_ok && s >= self.sat[0] && s <= self.sat[1] && v >= self.val[0] && v <= self.val[1]
    }
}

/// Sets every pixel whose HSV value falls in any of `ranges`.
pub fn hsv_mask(img: &ScanImage, ranges: &[HsvRange]) -> Result<BinaryMask> {
    if img.is_gray() {
        return Err(Error::Precondition(
            "hsv_mask needs a 3-channel image".into(),
        ));
    }
    let bits = img
        .data()
        .chunks_exact(3)
        .map(|p| {
            if ranges.is_empty() {
                return false;
            }
            let (h, s, v) = rgb_to_hsv(p[0], p[1], p[2]);
            ranges.iter().any(|r| r.contains(h, s, v))
        })
        .collect();
    BinaryMask::from_bits(img.width(), img.height(), bits)
}
