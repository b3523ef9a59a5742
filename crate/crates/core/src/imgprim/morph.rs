//! Binary morphology with a square structuring element of side `2 * radius + 1`.
//!
//! Pixels outside the raster are ignored: dilation never grows from them and
//! erosion never eats into a region because it touches the image border.

use crate::imgprim::BinaryMask;

pub fn dilate(mask: &BinaryMask, radius: usize) -> BinaryMask {
    if radius == 0 {
        return mask.clone();
    }
    separable(mask, radius, Op::Any)
}

pub fn erode(mask: &BinaryMask, radius: usize) -> BinaryMask {
    if radius == 0 {
        return mask.clone();
    }
    separable(mask, radius, Op::All)
}

#[derive(Clone, Copy)]
enum Op {
    Any,
    All,
}

fn separable(mask: &BinaryMask, radius: usize, op: Op) -> BinaryMask {
    let (w, h) = (mask.width(), mask.height());
    let src = mask.bits();
    let mut horiz = vec![false; w * h];
    let mut prefix = vec![0u32; w.max(h) + 1];

    for y in 0..h {
        let row = &src[y * w..(y + 1) * w];
        window_pass(row.iter().copied(), w, radius, op, &mut prefix, |x, v| {
            horiz[y * w + x] = v
        });
    }
    let mut out = vec![false; w * h];
    for x in 0..w {
        let col = (0..h).map(|y| horiz[y * w + x]);
        window_pass(col, h, radius, op, &mut prefix, |y, v| out[y * w + x] = v);
    }
    BinaryMask::from_bits(w, h, out).expect("same dims")
}

fn window_pass(
    line: impl Iterator<Item = bool>,
    len: usize,
    radius: usize,
    op: Op,
    prefix: &mut [u32],
    mut write: impl FnMut(usize, bool),
) {
    prefix[0] = 0;
    for (i, b) in line.enumerate() {
        prefix[i + 1] = prefix[i] + b as u32;
    }
    for i in 0..len {
        let lo = i.saturating_sub(radius);
        let hi = (i + radius + 1).min(len);
        let set = prefix[hi] - prefix[lo];
        let v = match op {
            Op::Any => set > 0,
            Op::All => set as usize == hi - lo,
        };
        write(i, v);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Direct definition: scan the full square window for every pixel.
    fn brute(mask: &BinaryMask, r: usize, dilate: bool) -> BinaryMask {
        let r = r as isize;
        BinaryMask::from_fn(mask.width(), mask.height(), |x, y| {
            let mut any = false;
            let mut all = true;
            for dy in -r..=r {
                for dx in -r..=r {
                    let (qx, qy) = (x as isize + dx, y as isize + dy);
                    if qx < 0 || qy < 0 || qx >= mask.width() as isize || qy >= mask.height() as isize
                    {
                        continue;
                    }
                    let b = mask.get(qx as usize, qy as usize);
                    any |= b;
                    all &= b;
                }
            }
            if dilate {
                any
            } else {
                all
            }
        })
    }

    fn mask_strategy() -> impl Strategy<Value = BinaryMask> {
        proptest::collection::vec(proptest::bool::weighted(0.3), 32 * 32)
            .prop_map(|bits| BinaryMask::from_bits(32, 32, bits).unwrap())
    }

    #[test]
    fn empty_stays_empty() {
        let m = BinaryMask::new(9, 7);
        for r in 0..4 {
            assert!(dilate(&m, r).is_empty());
            assert!(erode(&m, r).is_empty());
        }
    }

    #[test]
    fn single_pixel_grows_to_block() {
        let mut m = BinaryMask::new(7, 7);
        m.set(3, 3, true);
        let d = dilate(&m, 1);
        assert_eq!(d.count(), 9);
        for y in 2..=4 {
            for x in 2..=4 {
                assert!(d.get(x, y));
            }
        }
        assert_eq!(erode(&d, 1), m);
    }

    #[test]
    fn radius_zero_is_identity() {
        let mut m = BinaryMask::new(4, 4);
        m.set(1, 2, true);
        assert_eq!(dilate(&m, 0), m);
        assert_eq!(erode(&m, 0), m);
    }

    proptest! {
        #[test]
        fn matches_brute_force(m in mask_strategy(), r in 0usize..4) {
            prop_assert_eq!(dilate(&m, r), brute(&m, r, true));
            prop_assert_eq!(erode(&m, r), brute(&m, r, false));
        }

        #[test]
        fn closing_contains_original(m in mask_strategy(), r in 0usize..5) {
            prop_assert!(m.is_subset_of(&erode(&dilate(&m, r), r)));
        }

        #[test]
        fn monotone(m in mask_strategy(), extra in mask_strategy(), r in 0usize..4) {
            let mut bigger = m.clone();
            bigger.union_with(&extra);
            prop_assert!(dilate(&m, r).is_subset_of(&dilate(&bigger, r)));
            prop_assert!(erode(&m, r).is_subset_of(&erode(&bigger, r)));
        }
    }
}
