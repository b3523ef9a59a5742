use crate::error::{Error, Result};
use crate::imgprim::{pad_replicate, BinaryMask, ScanImage};

/// 3x3 edge kernel (centre 8, neighbours -1, clamped to 0..=255) followed by a
/// 3x3 maximum filter. Borders replicate.
pub fn edge_enhance(img: &ScanImage) -> Result<ScanImage> {
    if !img.is_gray() {
        return Err(Error::Precondition("edge_enhance needs a 1-channel image".into()));
    }
    let (w, h) = (img.width(), img.height());
    let p = pad_replicate(img.data(), w, h, 1);
    let pw = w + 2;
    let mut edges = vec![0u8; w * h];
    for y in 0..h {
        let (up, mid, down) = (&p[y * pw..], &p[(y + 1) * pw..], &p[(y + 2) * pw..]);
        for x in 0..w {
            let mut acc = 9 * mid[x + 1] as i32;
            for row in [up, mid, down] {
                acc -= row[x] as i32 + row[x + 1] as i32 + row[x + 2] as i32;
            }
            edges[y * w + x] = acc.clamp(0, 255) as u8;
        }
    }
    let maxed = max_filter_3x3(&edges, w, h);
    ScanImage::new(w, h, 1, maxed, img.source_id())
}

fn max_filter_3x3(src: &[u8], w: usize, h: usize) -> Vec<u8> {
    let mut horiz = vec![0u8; w * h];
    for y in 0..h {
        let row = &src[y * w..(y + 1) * w];
        for x in 0..w {
            let lo = x.saturating_sub(1);
            let hi = (x + 2).min(w);
            horiz[y * w + x] = row[lo..hi].iter().copied().max().unwrap_or(0);
        }
    }
    let mut out = vec![0u8; w * h];
    for y in 0..h {
        let lo = y.saturating_sub(1);
        let hi = (y + 2).min(h);
        for x in 0..w {
            out[y * w + x] = (lo..hi).map(|yy| horiz[yy * w + x]).max().unwrap_or(0);
        }
    }
    out
}

/// Mask of gray pixels strictly brighter than `level`.
pub fn threshold_above(img: &ScanImage, level: u8) -> BinaryMask {
    debug_assert!(img.is_gray());
    let bits = img.data().iter().map(|&v| v > level).collect();
    BinaryMask::from_bits(img.width(), img.height(), bits).expect("same dims")
}
