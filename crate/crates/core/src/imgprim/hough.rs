//! Progressive probabilistic Hough transform for line segments
//! (1 degree angular and 1 px distance resolution).
//!
//! Points are visited in a shuffled order drawn from a fixed seed, so the
//! output is a pure function of the input mask.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::imgprim::BinaryMask;

const NUM_ANGLES: usize = 180;
const SHUFFLE_SEED: u64 = 0x4c49_4e45_5345_4753;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineSegment {
    pub p0: (usize, usize),
    pub p1: (usize, usize),
}

impl LineSegment {
    pub fn dx(&self) -> f64 {
        self.p1.0 as f64 - self.p0.0 as f64
    }

    pub fn dy(&self) -> f64 {
        self.p1.1 as f64 - self.p0.1 as f64
    }

    pub fn length(&self) -> f64 {
        self.dx().hypot(self.dy())
    }

    /// Direction in degrees, folded into `[0, 180)`.
    pub fn angle_deg(&self) -> f64 {
        let a = self.dy().atan2(self.dx()).to_degrees();
        a.rem_euclid(180.0)
    }

    /// Acute angle between the two segments' directions, in `[0, 90]`.
    pub fn angle_between(&self, other: &LineSegment) -> f64 {
        let d = (self.angle_deg() - other.angle_deg()).abs();
        d.min(180.0 - d)
    }

    /// Intersection of the two supporting lines, `None` when parallel.
    pub fn line_intersection(&self, other: &LineSegment) -> Option<(f64, f64)> {
        let (x1, y1) = (self.p0.0 as f64, self.p0.1 as f64);
        let (x3, y3) = (other.p0.0 as f64, other.p0.1 as f64);
        let (d1x, d1y) = (self.dx(), self.dy());
        let (d2x, d2y) = (other.dx(), other.dy());
        let denom = d1x * d2y - d1y * d2x;
        if denom.abs() < 1e-9 {
            return None;
        }
        let t = ((x3 - x1) * d2y - (y3 - y1) * d2x) / denom;
        Some((x1 + t * d1x, y1 + t * d1y))
    }

    /// Euclidean distance from a point to the closed segment.
    pub fn distance_to(&self, p: (f64, f64)) -> f64 {
        let (ax, ay) = (self.p0.0 as f64, self.p0.1 as f64);
        let (dx, dy) = (self.dx(), self.dy());
        let len2 = dx * dx + dy * dy;
        let t = if len2 == 0.0 {
            0.0
        } else {
            (((p.0 - ax) * dx + (p.1 - ay) * dy) / len2).clamp(0.0, 1.0)
        };
        (p.0 - (ax + t * dx)).hypot(p.1 - (ay + t * dy))
    }
}

/// Detects segments of at least `min_len` pixels (along either axis, as in the
/// classic progressive formulation) whose accumulator cell reaches `min_votes`,
/// bridging gaps of up to `max_gap` unset pixels.
pub fn hough_lines(
    mask: &BinaryMask,
    min_votes: usize,
    min_len: usize,
    max_gap: usize,
) -> Vec<LineSegment> {
    let (w, h) = (mask.width(), mask.height());
    let min_votes = min_votes.max(1) as i32;

    let mut points: Vec<(usize, usize)> = Vec::new();
    for y in 0..h {
        for x in 0..w {
            if mask.get(x, y) {
                points.push((x, y));
            }
        }
    }
    if points.is_empty() {
        return Vec::new();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(SHUFFLE_SEED);
    points.shuffle(&mut rng);

    let trig: Vec<(f64, f64)> = (0..NUM_ANGLES)
        .map(|n| {
            let t = (n as f64).to_radians();
            (t.cos(), t.sin())
        })
        .collect();
    let offset = (w + h) as isize;
    let num_rho = 2 * (w + h) + 1;
    let rho_index = |x: usize, y: usize, n: usize| -> usize {
        let (c, s) = trig[n];
        ((x as f64 * c + y as f64 * s).round() as isize + offset) as usize
    };

    let mut accum = vec![0i32; NUM_ANGLES * num_rho];
    let mut live: Vec<bool> = mask.bits().to_vec();
    let mut voted = vec![false; w * h];
    let mut segments = Vec::new();

    for &(px, py) in &points {
        if !live[py * w + px] {
            continue;
        }
        let mut best = (0i32, 0usize);
        for n in 0..NUM_ANGLES {
            let cell = &mut accum[n * num_rho + rho_index(px, py, n)];
            *cell += 1;
            if *cell > best.0 {
                best = (*cell, n);
            }
        }
        voted[py * w + px] = true;
        if best.0 < min_votes {
            continue;
        }

        // Walk along the line through (px, py) perpendicular to the normal angle.
        let (c, s) = trig[best.1];
        let (dir_x, dir_y) = (-s, c);
        let (step_x, step_y) = if dir_x.abs() > dir_y.abs() {
            (dir_x.signum(), dir_y / dir_x.abs())
        } else {
            (dir_x / dir_y.abs(), dir_y.signum())
        };

        let mut ends = [(px, py); 2];
        for (k, end) in ends.iter_mut().enumerate() {
            let sign = if k == 0 { 1.0 } else { -1.0 };
            let (mut fx, mut fy) = (px as f64, py as f64);
            let mut gap = 0usize;
            loop {
                fx += sign * step_x;
                fy += sign * step_y;
                let (xi, yi) = (fx.round(), fy.round());
                if xi < 0.0 || yi < 0.0 || xi >= w as f64 || yi >= h as f64 {
                    break;
                }
                let (xi, yi) = (xi as usize, yi as usize);
                if live[yi * w + xi] {
                    gap = 0;
                    *end = (xi, yi);
                } else {
                    gap += 1;
                    if gap > max_gap {
                        break;
                    }
                }
            }
        }

        let good = ends[0].0.abs_diff(ends[1].0) >= min_len
            || ends[0].1.abs_diff(ends[1].1) >= min_len;

        // Clear the walked pixels; un-vote them when the segment is kept.
        for (k, end) in ends.iter().enumerate() {
            let sign = if k == 0 { 1.0 } else { -1.0 };
            let (mut fx, mut fy) = (px as f64, py as f64);
            loop {
                let (xi, yi) = (fx.round() as usize, fy.round() as usize);
                let i = yi * w + xi;
                if live[i] {
                    if good && voted[i] {
                        for n in 0..NUM_ANGLES {
                            accum[n * num_rho + rho_index(xi, yi, n)] -= 1;
                        }
                        voted[i] = false;
                    }
                    live[i] = false;
                }
                if (xi, yi) == *end {
                    break;
                }
                fx += sign * step_x;
                fy += sign * step_y;
                if fx.round() < 0.0
                    || fy.round() < 0.0
                    || fx.round() >= w as f64
                    || fy.round() >= h as f64
                {
                    break;
                }
            }
        }

        if good {
            segments.push(LineSegment {
                p0: ends[1],
                p1: ends[0],
            });
        }
    }
    segments
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_mask() {
        assert!(hough_lines(&BinaryMask::new(50, 50), 10, 10, 3).is_empty());
    }

    #[test]
    fn horizontal_line() {
        let mut m = BinaryMask::new(160, 80);
        for x in 30..130 {
            m.set(x, 40, true);
        }
        let segs = hough_lines(&m, 30, 50, 3);
        assert!(!segs.is_empty());
        let s = segs.iter().max_by(|a, b| a.length().total_cmp(&b.length())).unwrap();
        let a = s.angle_deg();
        assert!(a.min(180.0 - a) <= 2.0, "angle {a}");
        assert!(s.length() >= 95.0);
    }

    #[test]
    fn dotted_line_bridged() {
        let mut m = BinaryMask::new(140, 60);
        // 3-px dashes, 4-px gaps over 80 px
        for x in 20..100 {
            if (x - 20) % 7 < 3 {
                m.set(x, 30, true);
            }
        }
        let segs = hough_lines(&m, 20, 30, 6);
        assert!(segs.iter().any(|s| s.length() >= 60.0), "{segs:?}");
        // without gap bridging no single segment survives the length rule
        assert!(hough_lines(&m, 20, 30, 2).is_empty());
    }

    #[test]
    fn diagonal_line() {
        let mut m = BinaryMask::new(100, 100);
        for i in 10..90 {
            m.set(i, i, true);
        }
        let segs = hough_lines(&m, 20, 40, 2);
        assert_eq!(segs.len(), 1);
        assert!((segs[0].angle_deg() - 45.0).abs() <= 2.0);
    }

    #[test]
    fn deterministic() {
        let mut m = BinaryMask::new(80, 80);
        for i in 0..70 {
            m.set(i + 5, 40, true);
            m.set(40, i + 5, true);
        }
        assert_eq!(hough_lines(&m, 20, 30, 3), hough_lines(&m, 20, 30, 3));
    }

    #[test]
    fn segment_geometry() {
        let a = LineSegment { p0: (0, 0), p1: (10, 0) };
        let b = LineSegment { p0: (5, 0), p1: (5, 10) };
        assert_eq!(a.angle_between(&b), 90.0);
        let p = a.line_intersection(&b).unwrap();
        assert!((p.0 - 5.0).abs() < 1e-9 && p.1.abs() < 1e-9);
        let c = LineSegment { p0: (0, 3), p1: (10, 3) };
        assert!(a.line_intersection(&c).is_none());
        assert!((a.distance_to((15.0, 0.0)) - 5.0).abs() < 1e-9);
    }
}
