//! Raster primitives shared by every detector.

mod canny;
mod color;
mod components;
mod enhance;
mod hough;
mod image;
mod mask;
mod morph;

pub use canny::{canny_edges, gaussian_smooth, gradient_magnitude, sobel};
pub use color::{hsv_mask, luma, rgb_to_hsv, to_grayscale, HsvRange};
pub use components::{
    approx_polygon, connected_components, find_contours, label_components, Component, Contour,
    Labeling,
};
pub use enhance::{edge_enhance, threshold_above};
pub use hough::{hough_lines, LineSegment};
pub use image::ScanImage;
pub use mask::{BinaryMask, BoundingBox};
pub use morph::{dilate, erode};

/// Copy of a `w`x`h` raster with `r` replicated border pixels on every side,
/// so neighbourhood loops need no bounds handling.
pub(crate) fn pad_replicate<T: Copy>(src: &[T], w: usize, h: usize, r: usize) -> Vec<T> {
    let pw = w + 2 * r;
    let mut out = Vec::with_capacity(pw * (h + 2 * r));
    for py in 0..h + 2 * r {
        let row = &src[py.saturating_sub(r).min(h - 1) * w..][..w];
        out.extend(std::iter::repeat_n(row[0], r));
        out.extend_from_slice(row);
        out.extend(std::iter::repeat_n(row[w - 1], r));
    }
    out
}
