use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Axis-aligned box: inclusive `x_left`/`y_top`, exclusive `x_right`/`y_bottom`.
///
/// Serialized as the integer quadruple `[x_left, y_top, x_right, y_bottom]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "[usize; 4]", try_from = "[usize; 4]")]
pub struct BoundingBox {
    pub x_left: usize,
    pub y_top: usize,
    pub x_right: usize,
    pub y_bottom: usize,
}

impl BoundingBox {
    pub fn new(x_left: usize, y_top: usize, x_right: usize, y_bottom: usize) -> Result<Self> {
        if x_left >= x_right || y_top >= y_bottom {
            return Err(Error::param(format!(
                "degenerate box ({x_left}, {y_top}, {x_right}, {y_bottom})"
            )));
        }
        Ok(Self {
            x_left,
            y_top,
            x_right,
            y_bottom,
        })
    }

    /// Box of a single pixel.
    pub fn point(x: usize, y: usize) -> Self {
        Self {
            x_left: x,
            y_top: y,
            x_right: x + 1,
            y_bottom: y + 1,
        }
    }

    pub fn width(&self) -> usize {
        self.x_right - self.x_left
    }

    pub fn height(&self) -> usize {
        self.y_bottom - self.y_top
    }

    pub fn area(&self) -> usize {
        self.width() * self.height()
    }

    pub fn contains(&self, x: usize, y: usize) -> bool {
        x >= self.x_left && x < self.x_right && y >= self.y_top && y < self.y_bottom
    }

    pub fn contains_box(&self, other: &BoundingBox) -> bool {
        other.x_left >= self.x_left
            && other.y_top >= self.y_top
            && other.x_right <= self.x_right
            && other.y_bottom <= self.y_bottom
    }

    /// Grows the box to include pixel `(x, y)`.
    pub fn include(&mut self, x: usize, y: usize) {
        self.x_left = self.x_left.min(x);
        self.y_top = self.y_top.min(y);
        self.x_right = self.x_right.max(x + 1);
        self.y_bottom = self.y_bottom.max(y + 1);
    }

    pub fn translate(&self, dx: usize, dy: usize) -> Self {
        Self {
            x_left: self.x_left + dx,
            y_top: self.y_top + dy,
            x_right: self.x_right + dx,
            y_bottom: self.y_bottom + dy,
        }
    }

    pub fn center(&self) -> (f64, f64) {
        (
            (self.x_left + self.x_right) as f64 / 2.0,
            (self.y_top + self.y_bottom) as f64 / 2.0,
        )
    }
}

impl From<BoundingBox> for [usize; 4] {
    fn from(b: BoundingBox) -> Self {
        [b.x_left, b.y_top, b.x_right, b.y_bottom]
    }
}

impl TryFrom<[usize; 4]> for BoundingBox {
    type Error = Error;

    fn try_from(q: [usize; 4]) -> Result<Self> {
        BoundingBox::new(q[0], q[1], q[2], q[3])
    }
}

/// One flag per pixel, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl BinaryMask {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            bits: vec![false; width * height],
        }
    }

    pub fn from_bits(width: usize, height: usize, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != width * height {
            return Err(Error::Format(format!(
                "mask holds {} flags, {width}x{height} needs {}",
                bits.len(),
                width * height
            )));
        }
        Ok(Self {
            width,
            height,
            bits,
        })
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> bool) -> Self {
        let mut bits = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                bits.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            bits,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    /// Like [`get`](Self::get) but out-of-range coordinates read as unset.
    #[inline]
    pub fn get_signed(&self, x: isize, y: isize) -> bool {
        x >= 0
            && y >= 0
            && (x as usize) < self.width
            && (y as usize) < self.height
            && self.bits[y as usize * self.width + x as usize]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: bool) {
        self.bits[y * self.width + x] = v;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    /// Tight box around the set pixels, `None` when nothing is set.
    pub fn extent(&self) -> Option<BoundingBox> {
        let mut bbox: Option<BoundingBox> = None;
        for y in 0..self.height {
            let row = &self.bits[y * self.width..(y + 1) * self.width];
            let Some(first) = row.iter().position(|&b| b) else {
                continue;
            };
            let last = row.iter().rposition(|&b| b).unwrap_or(first);
            match bbox.as_mut() {
                Some(b) => {
                    b.include(first, y);
                    b.include(last, y);
                }
                None => {
                    let mut b = BoundingBox::point(first, y);
                    b.include(last, y);
                    bbox = Some(b);
                }
            }
        }
        bbox
    }

    /// `true` when every set pixel of `self` is also set in `other`.
    pub fn is_subset_of(&self, other: &BinaryMask) -> bool {
        self.bits.iter().zip(&other.bits).all(|(&a, &b)| !a || b)
    }

    pub fn union_with(&mut self, other: &BinaryMask) {
        for (a, &b) in self.bits.iter_mut().zip(&other.bits) {
            *a |= b;
        }
    }

    /// Clears every pixel outside `keep`.
    pub fn retain_within(&mut self, keep: &BoundingBox) {
        for y in 0..self.height {
            for x in 0..self.width {
                if !keep.contains(x, y) {
                    self.bits[y * self.width + x] = false;
                }
            }
        }
    }
}
