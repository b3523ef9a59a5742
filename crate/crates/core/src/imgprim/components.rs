use crate::imgprim::{BinaryMask, BoundingBox};

/// An 8-connected region of set pixels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Component {
    /// 1-based label, assigned in raster order of each region's first pixel.
    pub id: u32,
    pub pixel_count: usize,
    pub bbox: BoundingBox,
    /// First pixel of the region in raster order; always on its outer boundary.
    pub seed: (usize, usize),
}

/// Per-pixel labels (0 = background) plus the component table in label order.
#[derive(Debug, Clone)]
pub struct Labeling {
    pub width: usize,
    pub height: usize,
    pub labels: Vec<u32>,
    pub components: Vec<Component>,
}

impl Labeling {
    /// Mask containing only the pixels of component `id`.
    pub fn component_mask(&self, id: u32) -> BinaryMask {
        let bits = self.labels.iter().map(|&l| l == id).collect();
        BinaryMask::from_bits(self.width, self.height, bits).expect("same dims")
    }
}

const NEIGHBORS_8: [(isize, isize); 8] = [
    (1, 0),
    (1, 1),
    (0, 1),
    (-1, 1),
    (-1, 0),
    (-1, -1),
    (0, -1),
    (1, -1),
];

pub fn label_components(mask: &BinaryMask) -> Labeling {
    let (w, h) = (mask.width(), mask.height());
    let bits = mask.bits();
    let mut labels = vec![0u32; w * h];
    let mut components = Vec::new();
    let mut stack = Vec::new();

    for start in 0..w * h {
        if !bits[start] || labels[start] != 0 {
            continue;
        }
        let id = components.len() as u32 + 1;
        let (sx, sy) = (start % w, start / w);
        let mut bbox = BoundingBox::point(sx, sy);
        let mut count = 0usize;
        labels[start] = id;
        stack.push(start);
        while let Some(i) = stack.pop() {
            let (x, y) = (i % w, i / w);
            count += 1;
            bbox.include(x, y);
            for (dx, dy) in NEIGHBORS_8 {
                let (nx, ny) = (x as isize + dx, y as isize + dy);
                if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                    continue;
                }
                let j = ny as usize * w + nx as usize;
                if bits[j] && labels[j] == 0 {
                    labels[j] = id;
                    stack.push(j);
                }
            }
        }
        components.push(Component {
            id,
            pixel_count: count,
            bbox,
            seed: (sx, sy),
        });
    }
    Labeling {
        width: w,
        height: h,
        labels,
        components,
    }
}

/// 8-connected components sorted by pixel count, largest first (ties by label).
pub fn connected_components(mask: &BinaryMask) -> Vec<Component> {
    let mut comps = label_components(mask).components;
    comps.sort_by(|a, b| b.pixel_count.cmp(&a.pixel_count).then(a.id.cmp(&b.id)));
    comps
}

/// Outer boundary of one region as a closed point sequence (first point not repeated).
#[derive(Debug, Clone, PartialEq)]
pub struct Contour {
    pub points: Vec<(usize, usize)>,
    pub bbox: BoundingBox,
}

impl Contour {
    /// Closed polyline length.
    pub fn perimeter(&self) -> f64 {
        let n = self.points.len();
        if n < 2 {
            return 0.0;
        }
        (0..n)
            .map(|i| dist(self.points[i], self.points[(i + 1) % n]))
            .sum()
    }
}

/// External contours of every 8-connected region, in raster order of the regions.
pub fn find_contours(mask: &BinaryMask) -> Vec<Contour> {
    label_components(mask)
        .components
        .iter()
        .map(|c| {
            let points = trace_boundary(mask, c.seed, c.pixel_count);
            Contour {
                points,
                bbox: c.bbox,
            }
        })
        .collect()
}

/// Moore-neighbour tracing with Jacob's stopping criterion. `seed` must be the
/// region's first pixel in raster order so its west neighbour is background.
fn trace_boundary(mask: &BinaryMask, seed: (usize, usize), pixel_count: usize) -> Vec<(usize, usize)> {
    let dir_of = |dx: isize, dy: isize| {
        NEIGHBORS_8
            .iter()
            .position(|&d| d == (dx, dy))
            .expect("unit offset")
    };
    let start_back = dir_of(-1, 0);
    let mut points = vec![seed];
    let (mut cx, mut cy) = (seed.0 as isize, seed.1 as isize);
    let mut back = start_back;
    // Each boundary pixel can be visited at most 4 times from distinct sides.
    let max_steps = 4 * pixel_count + 8;

    for _ in 0..max_steps {
        let mut found = None;
        for k in 1..8 {
            let d = (back + k) % 8;
            let (dx, dy) = NEIGHBORS_8[d];
            if mask.get_signed(cx + dx, cy + dy) {
                found = Some((d, (back + k - 1) % 8));
                break;
            }
        }
        let Some((d, prev)) = found else {
            return points; // isolated pixel
        };
        let (nx, ny) = (cx + NEIGHBORS_8[d].0, cy + NEIGHBORS_8[d].1);
        let (px, py) = (cx + NEIGHBORS_8[prev].0, cy + NEIGHBORS_8[prev].1);
        back = dir_of(px - nx, py - ny);
        cx = nx;
        cy = ny;
        if (cx as usize, cy as usize) == seed && back == start_back {
            break;
        }
        points.push((cx as usize, cy as usize));
    }
    points
}

fn dist(a: (usize, usize), b: (usize, usize)) -> f64 {
    let dx = a.0 as f64 - b.0 as f64;
    let dy = a.1 as f64 - b.1 as f64;
    (dx * dx + dy * dy).sqrt()
}

fn point_line_distance(p: (usize, usize), a: (usize, usize), b: (usize, usize)) -> f64 {
    let (px, py) = (p.0 as f64, p.1 as f64);
    let (ax, ay) = (a.0 as f64, a.1 as f64);
    let (bx, by) = (b.0 as f64, b.1 as f64);
    let len = dist(a, b);
    if len == 0.0 {
        return dist(p, a);
    }
    ((bx - ax) * (ay - py) - (ax - px) * (by - ay)).abs() / len
}

fn simplify_open(points: &[(usize, usize)], epsilon: f64, out: &mut Vec<(usize, usize)>) {
    // Emits every kept vertex except the last one.
    let n = points.len();
    if n <= 2 {
        out.push(points[0]);
        return;
    }
    let (first, last) = (points[0], points[n - 1]);
    let (idx, dmax) = points[1..n - 1]
        .iter()
        .enumerate()
        .map(|(i, &p)| (i + 1, point_line_distance(p, first, last)))
        .fold((0, -1.0), |acc, cur| if cur.1 > acc.1 { cur } else { acc });
    if dmax > epsilon {
        simplify_open(&points[..=idx], epsilon, out);
        simplify_open(&points[idx..], epsilon, out);
    } else {
        out.push(first);
    }
}

/// Douglas-Peucker approximation of a closed contour. Returns the kept vertices.
pub fn approx_polygon(points: &[(usize, usize)], epsilon: f64) -> Vec<(usize, usize)> {
    if points.len() < 3 {
        return points.to_vec();
    }
    let far = (1..points.len())
        .max_by(|&a, &b| {
            dist(points[0], points[a])
                .partial_cmp(&dist(points[0], points[b]))
                .unwrap()
        })
        .expect("at least 3 points");
    let mut out = Vec::new();
    simplify_open(&points[..=far], epsilon, &mut out);
    let mut tail: Vec<(usize, usize)> = points[far..].to_vec();
    tail.push(points[0]);
    simplify_open(&tail, epsilon, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn mask_with(w: usize, h: usize, pts: &[(usize, usize)]) -> BinaryMask {
        let mut m = BinaryMask::new(w, h);
        for &(x, y) in pts {
            m.set(x, y, true);
        }
        m
    }

    fn block(m: &mut BinaryMask, x0: usize, y0: usize, x1: usize, y1: usize) {
        for y in y0..y1 {
            for x in x0..x1 {
                m.set(x, y, true);
            }
        }
    }

    #[test]
    fn empty_mask_has_no_components() {
        let m = BinaryMask::new(5, 5);
        assert!(connected_components(&m).is_empty());
        assert!(find_contours(&m).is_empty());
    }

    #[test]
    fn two_blocks() {
        let mut m = BinaryMask::new(10, 10);
        block(&mut m, 0, 0, 2, 2);
        block(&mut m, 5, 5, 7, 7);
        let cc = connected_components(&m);
        assert_eq!(cc.len(), 2);
        assert!(cc.iter().all(|c| c.pixel_count == 4));
    }

    #[test]
    fn diagonal_pixels_join() {
        let m = mask_with(4, 4, &[(0, 0), (1, 1), (2, 2)]);
        let cc = connected_components(&m);
        assert_eq!(cc.len(), 1);
        assert_eq!(cc[0].pixel_count, 3);
    }

    #[test]
    fn sorted_by_size() {
        let mut m = BinaryMask::new(20, 10);
        block(&mut m, 0, 0, 2, 2);
        block(&mut m, 5, 0, 15, 5);
        let cc = connected_components(&m);
        assert_eq!(cc[0].pixel_count, 50);
        assert_eq!(cc[1].pixel_count, 4);
    }

    #[test]
    fn filled_square_contour() {
        let mut m = BinaryMask::new(20, 20);
        block(&mut m, 5, 5, 15, 15);
        let cs = find_contours(&m);
        assert_eq!(cs.len(), 1);
        assert_eq!(cs[0].bbox, BoundingBox::new(5, 5, 15, 15).unwrap());
        // Boundary of a 10x10 block has 36 pixels.
        assert_eq!(cs[0].points.len(), 36);
        let poly = approx_polygon(&cs[0].points, 0.02 * cs[0].perimeter());
        assert_eq!(poly.len(), 4);
    }

    #[test]
    fn hollow_rectangle_single_external_contour() {
        let mut m = BinaryMask::new(60, 40);
        for x in 10..50 {
            m.set(x, 5, true);
            m.set(x, 30, true);
        }
        for y in 5..31 {
            m.set(10, y, true);
            m.set(49, y, true);
        }
        let cs = find_contours(&m);
        assert_eq!(cs.len(), 1);
        assert_eq!(cs[0].bbox, BoundingBox::new(10, 5, 50, 31).unwrap());
        let poly = approx_polygon(&cs[0].points, 0.02 * cs[0].perimeter());
        assert_eq!(poly.len(), 4);
    }

    #[test]
    fn single_pixel_contour() {
        let m = mask_with(3, 3, &[(1, 1)]);
        let cs = find_contours(&m);
        assert_eq!(cs[0].points, vec![(1, 1)]);
    }

    #[test]
    fn cross_shape_is_not_quadrilateral() {
        let mut m = BinaryMask::new(40, 40);
        block(&mut m, 18, 5, 22, 35);
        block(&mut m, 5, 18, 35, 22);
        let cs = find_contours(&m);
        assert_eq!(cs.len(), 1);
        let poly = approx_polygon(&cs[0].points, 0.02 * cs[0].perimeter());
        assert!(poly.len() > 4);
    }

    proptest! {
        #[test]
        fn counts_sum_to_set_bits(bits in proptest::collection::vec(proptest::bool::weighted(0.4), 24 * 24)) {
            let m = BinaryMask::from_bits(24, 24, bits).unwrap();
            let total: usize = connected_components(&m).iter().map(|c| c.pixel_count).sum();
            prop_assert_eq!(total, m.count());
        }

        #[test]
        fn contour_points_lie_on_region_and_span_bbox(bits in proptest::collection::vec(proptest::bool::weighted(0.5), 16 * 16)) {
            let m = BinaryMask::from_bits(16, 16, bits).unwrap();
            for c in find_contours(&m) {
                let mut b = BoundingBox::point(c.points[0].0, c.points[0].1);
                for &(x, y) in &c.points {
                    prop_assert!(m.get(x, y));
                    b.include(x, y);
                }
                prop_assert_eq!(b, c.bbox);
            }
        }
    }
}
