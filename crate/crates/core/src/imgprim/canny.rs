//! Canny edge detection with fixed internals: 5x5 Gaussian (sigma 1.4),
//! 3x3 Sobel, L2 magnitude, four-direction non-maximum suppression and
//! 8-connected hysteresis. Borders replicate.

use crate::error::{Error, Result};
use crate::imgprim::{pad_replicate, BinaryMask, ScanImage};

const SIGMA: f32 = 1.4;

fn gaussian_taps() -> [f32; 5] {
    let mut k = [0f32; 5];
    for (i, t) in k.iter_mut().enumerate() {
        let x = i as f32 - 2.0;
        *t = (-(x * x) / (2.0 * SIGMA * SIGMA)).exp();
    }
    let sum: f32 = k.iter().sum();
    k.map(|t| t / sum)
}

/// Separable 5x5 Gaussian blur of a gray image into floats.
pub fn gaussian_smooth(img: &ScanImage) -> Vec<f32> {
    let (w, h) = (img.width(), img.height());
    let taps = gaussian_taps();
    let src = pad_replicate(img.data(), w, h, 2);
    let pw = w + 4;

    // horizontal pass keeps the 2-row vertical padding
    let mut tmp = vec![0f32; w * (h + 4)];
    for py in 0..h + 4 {
        let row = &src[py * pw..(py + 1) * pw];
        let out = &mut tmp[py * w..(py + 1) * w];
        for (x, o) in out.iter_mut().enumerate() {
            let win = &row[x..x + 5];
            let mut acc = 0.0;
            for (t, &v) in taps.iter().zip(win) {
                acc += t * v as f32;
            }
            *o = acc;
        }
    }
    let mut out = vec![0f32; w * h];
    for y in 0..h {
        for (x, o) in out[y * w..(y + 1) * w].iter_mut().enumerate() {
            let mut acc = 0.0;
            for (k, t) in taps.iter().enumerate() {
                acc += t * tmp[(y + k) * w + x];
            }
            *o = acc;
        }
    }
    out
}

/// Sobel gradients `(gx, gy)` of a float raster, replicated borders.
pub fn sobel(buf: &[f32], w: usize, h: usize) -> (Vec<f32>, Vec<f32>) {
    let p = pad_replicate(buf, w, h, 1);
    let pw = w + 2;
    let mut gx = vec![0f32; w * h];
    let mut gy = vec![0f32; w * h];
    for y in 0..h {
        let (up, mid, down) = (&p[y * pw..], &p[(y + 1) * pw..], &p[(y + 2) * pw..]);
        for x in 0..w {
            let i = y * w + x;
            gx[i] = (up[x + 2] + 2.0 * mid[x + 2] + down[x + 2])
                - (up[x] + 2.0 * mid[x] + down[x]);
            gy[i] = (down[x] + 2.0 * down[x + 1] + down[x + 2])
                - (up[x] + 2.0 * up[x + 1] + up[x + 2]);
        }
    }
    (gx, gy)
}

/// Gradient magnitude after smoothing, the quantity the thresholds apply to.
pub fn gradient_magnitude(img: &ScanImage) -> Vec<f32> {
    let smooth = gaussian_smooth(img);
    let (gx, gy) = sobel(&smooth, img.width(), img.height());
    gx.iter().zip(&gy).map(|(a, b)| (a * a + b * b).sqrt()).collect()
}

pub fn canny_edges(img: &ScanImage, lo: f32, hi: f32) -> Result<BinaryMask> {
    if !img.is_gray() {
        return Err(Error::Precondition("canny_edges needs a 1-channel image".into()));
    }
    if !(0.0..=255.0).contains(&lo) || !(0.0..=255.0).contains(&hi) || lo > hi {
        return Err(Error::param(format!(
            "Canny thresholds must satisfy 0 <= lo <= hi <= 255, got lo={lo} hi={hi}"
        )));
    }
    let (w, h) = (img.width(), img.height());
    let smooth = gaussian_smooth(img);
    let (gx, gy) = sobel(&smooth, w, h);
    let mag: Vec<f32> = gx.iter().zip(&gy).map(|(a, b)| (a * a + b * b).sqrt()).collect();

    let mag_at = |x: isize, y: isize| {
        if x < 0 || y < 0 || x >= w as isize || y >= h as isize {
            0.0
        } else {
            mag[y as usize * w + x as usize]
        }
    };

    // 0 = suppressed, 1 = weak, 2 = strong
    let mut class = vec![0u8; w * h];
    let tan22 = 0.414_213_57_f32;
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            let m = mag[i];
            if m <= 0.0 || m < lo {
                continue;
            }
            let (ax, ay) = (gx[i].abs(), gy[i].abs());
            let (dx, dy): (isize, isize) = if ay <= ax * tan22 {
                (1, 0)
            } else if ax <= ay * tan22 {
                (0, 1)
            } else if (gx[i] > 0.0) == (gy[i] > 0.0) {
                (1, 1)
            } else {
                (1, -1)
            };
            let (xi, yi) = (x as isize, y as isize);
            let before = mag_at(xi - dx, yi - dy);
            let after = mag_at(xi + dx, yi + dy);
            if m > before && m >= after {
                class[i] = if m >= hi { 2 } else { 1 };
            }
        }
    }

    let mut out = BinaryMask::new(w, h);
    let mut stack: Vec<usize> = (0..w * h).filter(|&i| class[i] == 2).collect();
    for &i in &stack {
        out.set(i % w, i / w, true);
    }
    while let Some(i) = stack.pop() {
        let (x, y) = ((i % w) as isize, (i / w) as isize);
        for dy in -1..=1 {
            for dx in -1..=1 {
                let (nx, ny) = (x + dx, y + dy);
                if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                    continue;
                }
                let j = ny as usize * w + nx as usize;
                if class[j] == 1 && !out.get(nx as usize, ny as usize) {
                    out.set(nx as usize, ny as usize, true);
                    stack.push(j);
                }
            }
        }
    }
    Ok(out)
}
