use super::{OcrBackend, OcrToken};
use crate::error::Result;
use crate::font::{templates, Template, GLYPH_H};
use crate::imgprim::{to_grayscale, BoundingBox, ScanImage};

/// Template-matching reader for text drawn with the embedded bitmap font at
/// integer scales. It serves as the reference backend for generated scenes;
/// it does not read arbitrary fonts.
#[derive(Debug, Clone)]
pub struct FontBackend {
    /// Gray level at or above which a pixel belongs to a glyph.
    pub threshold: u8,
    pub max_scale: usize,
    /// Minimum fraction of agreeing cells for a glyph to be accepted.
    pub min_glyph_score: f64,
    templates: Vec<Template>,
}

impl Default for FontBackend {
    fn default() -> Self {
        Self {
            threshold: 200,
            max_scale: 4,
            min_glyph_score: 0.9,
            templates: templates(),
        }
    }
}

impl FontBackend {
    fn read_glyph(&self, lit: &dyn Fn(usize, usize) -> bool, x0: usize, top: usize, cells: usize, s: usize) -> Option<(char, f64)> {
        let mut best: Option<(char, f64)> = None;
        for t in self.templates.iter().filter(|t| t.width == cells) {
            let mut agree = 0;
            for r in 0..GLYPH_H {
                for c in 0..cells {
                    let on = lit(x0 + c * s + s / 2, top + r * s + s / 2);
                    agree += (on == t.bits[r][c]) as usize;
                }
            }
            let score = agree as f64 / (GLYPH_H * cells) as f64;
            if best.is_none_or(|(_, b)| score > b) {
                best = Some((t.ch, score));
            }
        }
        best.filter(|&(_, score)| score >= self.min_glyph_score)
    }
}

impl OcrBackend for FontBackend {
    fn recognize(&mut self, img: &ScanImage) -> Result<Vec<OcrToken>> {
        let gray = to_grayscale(img);
        let (w, h) = (gray.width(), gray.height());
        let data = gray.data();
        let lit = |x: usize, y: usize| data[y * w + x] >= self.threshold;
        let row_lit: Vec<bool> = (0..h).map(|y| (0..w).any(|x| lit(x, y))).collect();

        let mut tokens = Vec::new();
        let mut y = 0;
        while y < h {
            if !row_lit[y] {
                y += 1;
                continue;
            }
            let top = y;
            while y < h && row_lit[y] {
                y += 1;
            }
            let height = y - top;
            if height % GLYPH_H != 0 || height / GLYPH_H > self.max_scale {
                continue;
            }
            let s = height / GLYPH_H;
            let col_lit: Vec<bool> = (0..w).map(|x| (top..y).any(|yy| lit(x, yy))).collect();

            // column runs -> glyphs, grouped into words by wide gaps
            let mut words: Vec<(usize, usize, String, f64, bool)> = Vec::new();
            let mut x = 0;
            let mut prev_end: Option<usize> = None;
            while x < w {
                if !col_lit[x] {
                    x += 1;
                    continue;
                }
                let x0 = x;
                while x < w && col_lit[x] {
                    x += 1;
                }
                let run = x - x0;
                let glyph = (run % s == 0)
                    .then(|| self.read_glyph(&lit, x0, top, run / s, s))
                    .flatten();
                let new_word = prev_end.is_none_or(|e| x0 - e >= 6 * s);
                if new_word {
                    words.push((x0, x, String::new(), 1.0, true));
                }
                let word = words.last_mut().expect("word started");
                word.1 = x;
                match glyph {
                    Some((ch, score)) => {
                        word.2.push(ch);
                        word.3 = word.3.min(score);
                    }
                    None => word.4 = false,
                }
                prev_end = Some(x);
            }
            for (x0, x1, text, conf, clean) in words {
                if !clean || text.is_empty() {
                    continue;
                }
                tokens.push(OcrToken::new(text, BoundingBox::new(x0, top, x1, y)?, conf)?);
            }
        }
        Ok(tokens)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::font::draw_text;

    fn read(img: &ScanImage) -> Vec<String> {
        FontBackend::default()
            .recognize(img)
            .unwrap()
            .into_iter()
            .map(|t| t.text)
            .collect()
    }

    #[test]
    fn reads_rendered_label() {
        let mut img = ScanImage::filled_gray(400, 60, 0);
        draw_text(&mut img, "LT BREAST 3:00", 10, 10, 2, &[255]);
        assert_eq!(read(&img), ["LT", "BREAST", "3:00"]);
    }

    #[test]
    fn every_glyph_round_trips() {
        let all: String = templates().iter().map(|t| t.ch).collect();
        for scale in 1..=3 {
            let mut img = ScanImage::filled_rgb(all.len() * 6 * scale + 20, 40, [0, 0, 0]);
            draw_text(&mut img, &all, 5, 5, scale, &[255, 255, 255]);
            assert_eq!(read(&img), [all.clone()], "scale {scale}");
        }
    }

    #[test]
    fn two_lines_and_noise() {
        let mut img = ScanImage::filled_gray(300, 120, 0);
        draw_text(&mut img, "RT 10:30", 5, 5, 2, &[255]);
        draw_text(&mut img, "1.2 X 0.8 CM", 5, 60, 3, &[240]);
        // a solid block is not a glyph
        for y in 40..50 {
            for x in 200..260 {
                img.set_pixel(x, y, &[255]);
            }
        }
        assert_eq!(read(&img), ["RT", "10:30", "1.2", "X", "0.8", "CM"]);
    }

    #[test]
    fn blank_reads_nothing() {
        assert!(read(&ScanImage::filled_gray(50, 50, 0)).is_empty());
    }
}
