//! Embedded 5x7 bitmap font shared by the scene renderer and the template
//! OCR backend. Every glyph's lit columns are contiguous, so a glyph is
//! recoverable from the column runs of a rendered line.

use crate::imgprim::{BoundingBox, ScanImage};

pub const GLYPH_W: usize = 5;
pub const GLYPH_H: usize = 7;
/// Horizontal advance per character, in font cells.
pub const ADVANCE: usize = GLYPH_W + 1;

const GLYPHS: &[(char, [&str; GLYPH_H])] = &[
    ('A', [".###.", "#...#", "#...#", "#####", "#...#", "#...#", "#...#"]),
    ('B', ["####.", "#...#", "#...#", "####.", "#...#", "#...#", "####."]),
    ('C', [".###.", "#...#", "#....", "#....", "#....", "#...#", ".###."]),
    ('D', ["####.", "#...#", "#...#", "#...#", "#...#", "#...#", "####."]),
    ('E', ["#####", "#....", "#....", "####.", "#....", "#....", "#####"]),
    ('F', ["#####", "#....", "#....", "####.", "#....", "#....", "#...."]),
    ('G', [".###.", "#...#", "#....", "#.###", "#...#", "#...#", ".####"]),
    ('H', ["#...#", "#...#", "#...#", "#####", "#...#", "#...#", "#...#"]),
    ('I', [".###.", "..#..", "..#..", "..#..", "..#..", "..#..", ".###."]),
    ('J', ["..###", "...#.", "...#.", "...#.", "...#.", "#..#.", ".##.."]),
    ('K', ["#...#", "#..#.", "#.#..", "##...", "#.#..", "#..#.", "#...#"]),
    ('L', ["#....", "#....", "#....", "#....", "#....", "#....", "#####"]),
    ('M', ["#...#", "##.##", "#.#.#", "#.#.#", "#...#", "#...#", "#...#"]),
    ('N', ["#...#", "#...#", "##..#", "#.#.#", "#..##", "#...#", "#...#"]),
    ('O', [".###.", "#...#", "#...#", "#...#", "#...#", "#...#", ".###."]),
    ('P', ["####.", "#...#", "#...#", "####.", "#....", "#....", "#...."]),
    ('Q', [".###.", "#...#", "#...#", "#...#", "#.#.#", "#..#.", ".##.#"]),
    ('R', ["####.", "#...#", "#...#", "####.", "#.#..", "#..#.", "#...#"]),
    ('S', [".####", "#....", "#....", ".###.", "....#", "....#", "####."]),
    ('T', ["#####", "..#..", "..#..", "..#..", "..#..", "..#..", "..#.."]),
    ('U', ["#...#", "#...#", "#...#", "#...#", "#...#", "#...#", ".###."]),
    ('V', ["#...#", "#...#", "#...#", "#...#", "#...#", ".#.#.", "..#.."]),
    ('W', ["#...#", "#...#", "#...#", "#.#.#", "#.#.#", "#.#.#", ".#.#."]),
    ('X', ["#...#", "#...#", ".#.#.", "..#..", ".#.#.", "#...#", "#...#"]),
    ('Y', ["#...#", "#...#", ".#.#.", "..#..", "..#..", "..#..", "..#.."]),
    ('Z', ["#####", "....#", "...#.", "..#..", ".#...", "#....", "#####"]),
    ('0', [".###.", "#...#", "#..##", "#.#.#", "##..#", "#...#", ".###."]),
    ('1', ["..#..", ".##..", "..#..", "..#..", "..#..", "..#..", ".###."]),
    ('2', [".###.", "#...#", "....#", "...#.", "..#..", ".#...", "#####"]),
    ('3', ["#####", "...#.", "..#..", "...#.", "....#", "#...#", ".###."]),
    ('4', ["...#.", "..##.", ".#.#.", "#..#.", "#####", "...#.", "...#."]),
    ('5', ["#####", "#....", "####.", "....#", "....#", "#...#", ".###."]),
    ('6', ["..##.", ".#...", "#....", "####.", "#...#", "#...#", ".###."]),
    ('7', ["#####", "....#", "...#.", "..#..", ".#...", ".#...", ".#..."]),
    ('8', [".###.", "#...#", "#...#", ".###.", "#...#", "#...#", ".###."]),
    ('9', [".###.", "#...#", "#...#", ".####", "....#", "...#.", ".##.."]),
    ('.', [".....", ".....", ".....", ".....", ".....", ".##..", ".##.."]),
    (':', [".....", ".##..", ".##..", ".....", ".##..", ".##..", "....."]),
    ('\'', ["..#..", "..#..", ".#...", ".....", ".....", ".....", "....."]),
    ('-', [".....", ".....", ".....", "#####", ".....", ".....", "....."]),
    ('*', [".....", "#.#.#", ".###.", "#####", ".###.", "#.#.#", "....."]),
    ('/', ["....#", "....#", "...#.", "..#..", ".#...", "#....", "#...."]),
];

fn glyph_rows(c: char) -> Option<&'static [&'static str; GLYPH_H]> {
    GLYPHS.iter().find(|(g, _)| *g == c).map(|(_, rows)| rows)
}

pub fn is_renderable(c: char) -> bool {
    c == ' ' || glyph_rows(c).is_some()
}

/// A glyph cropped to its lit columns, as `bits[row][col]`.
#[derive(Debug, Clone)]
pub struct Template {
    pub ch: char,
    pub width: usize,
    pub bits: Vec<[bool; GLYPH_W]>,
}

pub fn templates() -> Vec<Template> {
    GLYPHS
        .iter()
        .map(|(ch, rows)| {
            let lit = |c: usize| rows.iter().any(|r| r.as_bytes()[c] == b'#');
            let first = (0..GLYPH_W).find(|&c| lit(c)).unwrap_or(0);
            let last = (0..GLYPH_W).rev().find(|&c| lit(c)).unwrap_or(0);
            let bits = rows
                .iter()
                .map(|r| {
                    let mut row = [false; GLYPH_W];
                    for c in first..=last {
                        row[c - first] = r.as_bytes()[c] == b'#';
                    }
                    row
                })
                .collect();
            Template {
                ch: *ch,
                width: last - first + 1,
                bits,
            }
        })
        .collect()
}

/// Pixel extent of `text` drawn at `scale`.
pub fn text_size(text: &str, scale: usize) -> (usize, usize) {
    let n = text.chars().count();
    if n == 0 {
        return (0, 0);
    }
    ((n * ADVANCE - 1) * scale, GLYPH_H * scale)
}

/// Draws `text` with its top-left cell at (x, y); pixels falling outside the
/// image are dropped. Returns the box of the lit pixels, if any.
pub fn draw_text(
    img: &mut ScanImage,
    text: &str,
    x: usize,
    y: usize,
    scale: usize,
    value: &[u8],
) -> Option<BoundingBox> {
    let mut lit: Option<BoundingBox> = None;
    for (i, c) in text.chars().enumerate() {
        let Some(rows) = glyph_rows(c.to_ascii_uppercase()) else {
            continue;
        };
        let cx = x + i * ADVANCE * scale;
        for (r, row) in rows.iter().enumerate() {
            for (k, b) in row.bytes().enumerate() {
                if b != b'#' {
                    continue;
                }
                for dy in 0..scale {
                    for dx in 0..scale {
                        let (px, py) = (cx + k * scale + dx, y + r * scale + dy);
                        if px < img.width() && py < img.height() {
                            img.set_pixel(px, py, value);
                            match lit.as_mut() {
                                Some(b) => b.include(px, py),
                                None => lit = Some(BoundingBox::point(px, py)),
                            }
                        }
                    }
                }
            }
        }
    }
    lit
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn glyph_columns_are_contiguous() {
        for (ch, rows) in GLYPHS {
            let lit: Vec<bool> = (0..GLYPH_W)
                .map(|c| rows.iter().any(|r| r.as_bytes()[c] == b'#'))
                .collect();
            let first = lit.iter().position(|&b| b).unwrap();
            let last = lit.iter().rposition(|&b| b).unwrap();
            assert!(lit[first..=last].iter().all(|&b| b), "glyph {ch:?}");
            assert!(rows.iter().all(|r| r.len() == GLYPH_W), "glyph {ch:?}");
        }
    }

    #[test]
    fn templates_unique() {
        let mut seen = HashSet::new();
        for t in templates() {
            assert!(seen.insert(t.bits.clone()), "duplicate template {:?}", t.ch);
        }
    }

    #[test]
    fn draw_reports_box() {
        let mut img = ScanImage::filled_gray(100, 30, 0);
        let b = draw_text(&mut img, "LT", 2, 3, 2, &[255]).unwrap();
        assert_eq!((b.x_left, b.y_top), (2, 3));
        assert_eq!(b.height(), 14);
        assert_eq!(text_size("LT", 2), (22, 14));
        assert!(draw_text(&mut img, " ", 0, 0, 2, &[255]).is_none());
    }
}
