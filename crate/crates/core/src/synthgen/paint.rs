use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::ScanShape;
use crate::imgprim::{erode, BinaryMask, BoundingBox, ScanImage};

pub const GREEN: [u8; 3] = [100, 255, 100];
const RED: [u8; 3] = [120, 10, 10];
const BLUE: [u8; 3] = [10, 20, 140];
const GRID: usize = 24;

/// Smooth tissue texture: bilinear blend of a coarse random grid, 80..=150.
pub fn texture(w: usize, h: usize, rng: &mut ChaCha8Rng) -> Vec<i32> {
    let (gw, gh) = (w / GRID + 2, h / GRID + 2);
    let grid: Vec<i32> = (0..gw * gh).map(|_| rng.random_range(80..=150)).collect();
    let g = |a: usize, b: usize| grid[b * gw + a];
    let n = GRID as i32;
    let mut out = vec![0i32; w * h];
    for y in 0..h {
        let (iy, ty) = (y / GRID, (y % GRID) as i32);
        for x in 0..w {
            let (ix, tx) = (x / GRID, (x % GRID) as i32);
            let top = g(ix, iy) * (n - tx) + g(ix + 1, iy) * tx;
            let bottom = g(ix, iy + 1) * (n - tx) + g(ix + 1, iy + 1) * tx;
            out[y * w + x] = (top * (n - ty) + bottom * ty + n * n / 2) / (n * n);
        }
    }
    out
}

fn isqrt(v: i64) -> i64 {
    let mut r = (v as f64).sqrt() as i64;
    while r * r > v {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= v {
        r += 1;
    }
    r
}

/// Pixel-centre membership test in doubled coordinates, so every shape is
/// exactly mirror-symmetric about the box centre.
pub fn shape_mask(shape: ScanShape, b: &BoundingBox, w: usize, h: usize) -> BinaryMask {
    let (x0, y0, x1, y1) = (
        b.x_left as i64,
        b.y_top as i64,
        b.x_right as i64,
        b.y_bottom as i64,
    );
    let (bw, bh) = (x1 - x0, y1 - y0);
    BinaryMask::from_fn(w, h, |x, y| {
        let (x, y) = (x as i64, y as i64);
        if x < x0 || x >= x1 || y < y0 || y >= y1 {
            return false;
        }
        let dx2 = 2 * x + 1 - (x0 + x1);
        match shape {
            ScanShape::Rectangular => true,
            ScanShape::Trapezoidal => {
                let top = 3 * bw / 5;
                let t = y - y0;
                dx2.abs() * (bh - 1).max(1) < top * (bh - 1).max(1) + (bw - top) * t
            }
            ScanShape::Convex => {
                // wide boxes get larger radii so the half-angle stays within
                // a curvilinear probe's field of view (sin <= 0.5)
                let r_out = (4 * bh / 3).max(bw);
                let r_in = r_out - bh;
                let dy2 = 2 * (y - (y0 - r_in)) + 1;
                let d2 = dx2 * dx2 + dy2 * dy2;
                let c = isqrt((2 * r_out).pow(2) - bw * bw);
                d2 >= (2 * r_in).pow(2) && d2 < (2 * r_out).pow(2) && dx2.abs() * c <= dy2 * bw
            }
            ScanShape::Irregular => {
                let cut = bw / 8;
                if (x - x0) + (y - y0) < cut || (x1 - 1 - x) + (y - y0) < cut {
                    return false;
                }
                let p = (x - x0) % 64;
                let tri = if p < 32 { p * 10 / 32 } else { (64 - p) * 10 / 32 };
                y <= y1 - 1 - tri
            }
        }
    })
}

pub fn erode_mask(mask: &BinaryMask, r: usize) -> BinaryMask {
    erode(mask, r)
}

fn put(img: &mut ScanImage, x: i64, y: i64, v: &[u8]) -> bool {
    if x < 0 || y < 0 || x >= img.width() as i64 || y >= img.height() as i64 {
        return false;
    }
    let (x, y) = (x as usize, y as usize);
    let changed = img.pixel(x, y) != v;
    img.set_pixel(x, y, v);
    changed
}

fn stroke_box(center: (usize, usize), size: usize) -> BoundingBox {
    let half = size / 2;
    BoundingBox {
        x_left: center.0 - half,
        y_top: center.1 - half,
        x_right: center.0 - half + size,
        y_bottom: center.1 - half + size,
    }
}

pub fn cross(img: &mut ScanImage, center: (usize, usize), size: usize, v: &[u8]) -> BoundingBox {
    let b = stroke_box(center, size);
    for k in 0..size {
        put(img, (b.x_left + k) as i64, center.1 as i64, v);
        put(img, center.0 as i64, (b.y_top + k) as i64, v);
    }
    b
}

pub fn x_marker(img: &mut ScanImage, center: (usize, usize), size: usize, v: &[u8]) -> BoundingBox {
    let b = stroke_box(center, size);
    for k in 0..size {
        let x = (b.x_left + k) as i64;
        put(img, x, (b.y_top + k) as i64, v);
        put(img, x, (b.y_top + size - 1 - k) as i64, v);
    }
    b
}

/// Point `t` major-axis steps from `c` along direction `d` (rounded half away from zero).
pub fn along(c: (usize, usize), d: (i64, i64), t: i64) -> (i64, i64) {
    let m = d.0.abs().max(d.1.abs());
    let scale = |v: i64| {
        let num = 2 * t * v;
        let q = (num.abs() + m) / (2 * m);
        if num < 0 {
            -q
        } else {
            q
        }
    };
    (c.0 as i64 + scale(d.0), c.1 as i64 + scale(d.1))
}

/// Dashed line through `c` (3 on, 4 off) with 'x' markers at both ends.
/// Returns the box of everything drawn.
pub fn dotted_line(
    img: &mut ScanImage,
    c: (usize, usize),
    d: (i64, i64),
    half_len: usize,
    marker: usize,
    v: &[u8],
) -> BoundingBox {
    let l = half_len as i64;
    let mut b = BoundingBox::point(c.0, c.1);
    for t in -l..=l {
        if (t + l) % 7 < 3 {
            let (x, y) = along(c, d, t);
            put(img, x, y, v);
            b.include(x as usize, y as usize);
        }
    }
    for s in [-l, l] {
        let (x, y) = along(c, d, s);
        let mb = x_marker(img, (x as usize, y as usize), marker, v);
        b.include(mb.x_left, mb.y_top);
        b.include(mb.x_right - 1, mb.y_bottom - 1);
    }
    b
}

/// Inscribed ellipse, red above the centre row and blue below. Returns the
/// number of painted pixels.
pub fn doppler(img: &mut ScanImage, r: &BoundingBox) -> usize {
    let (x0, y0, x1, y1) = (
        r.x_left as i64,
        r.y_top as i64,
        r.x_right as i64,
        r.y_bottom as i64,
    );
    let (w, h) = (x1 - x0, y1 - y0);
    let mut n = 0;
    for y in y0..y1 {
        for x in x0..x1 {
            let dx2 = 2 * x + 1 - (x0 + x1);
            let dy2 = 2 * y + 1 - (y0 + y1);
            if dx2 * dx2 * h * h + dy2 * dy2 * w * w <= w * w * h * h {
                let c = if dy2 < 0 { RED } else { BLUE };
                n += put(img, x, y, &c) as usize;
            }
        }
    }
    n
}

/// 2-px outline just inside `r`. Returns newly painted pixels.
pub fn outline(img: &mut ScanImage, r: &BoundingBox, c: [u8; 3]) -> usize {
    let mut n = 0;
    for y in r.y_top..r.y_bottom {
        for x in r.x_left..r.x_right {
            let edge = x < r.x_left + 2
                || x + 2 >= r.x_right
                || y < r.y_top + 2
                || y + 2 >= r.y_bottom;
            if edge {
                n += put(img, x as i64, y as i64, &c) as usize;
            }
        }
    }
    n
}

/// 2-px line from `a` to `b`. Returns newly painted pixels.
pub fn thick_line(img: &mut ScanImage, a: (usize, usize), b: (usize, usize), c: [u8; 3]) -> usize {
    let (ax, ay, bx, by) = (a.0 as i64, a.1 as i64, b.0 as i64, b.1 as i64);
    let steps = (bx - ax).abs().max((by - ay).abs()).max(1);
    let steep = (by - ay).abs() > (bx - ax).abs();
    let mut n = 0;
    for t in 0..=steps {
        let x = ax + ((bx - ax) * 2 * t + steps).div_euclid(2 * steps);
        let y = ay + ((by - ay) * 2 * t + steps).div_euclid(2 * steps);
        n += put(img, x, y, &c) as usize;
        n += if steep {
            put(img, x + 1, y, &c)
        } else {
            put(img, x, y + 1, &c)
        } as usize;
    }
    n
}
