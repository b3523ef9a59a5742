use std::path::Path;

use image::{DynamicImage, ImageReader};

use crate::error::{Error, Result};
use crate::imgprim::BoundingBox;

/// Decoded scan raster, 8 bits per channel, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScanImage {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<u8>,
    source_id: String,
}

impl ScanImage {
    /// Builds an image, validating the layout. Only gray (1) and RGB (3) are supported.
    pub fn new(
        width: usize,
        height: usize,
        channels: usize,
        data: Vec<u8>,
        source_id: impl Into<String>,
    ) -> Result<Self> {
        if channels != 1 && channels != 3 {
            return Err(Error::Format(format!(
                "unsupported channel count {channels}, expected 1 or 3"
            )));
        }
        if width == 0 || height == 0 {
            return Err(Error::Format(format!("empty raster {width}x{height}")));
        }
        if data.len() != width * height * channels {
            return Err(Error::Format(format!(
                "buffer holds {} bytes, {width}x{height}x{channels} needs {}",
                data.len(),
                width * height * channels
            )));
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
            source_id: source_id.into(),
        })
    }

    pub fn filled_gray(width: usize, height: usize, value: u8) -> Self {
        Self::new(width, height, 1, vec![value; width * height], "").expect("valid layout")
    }

    pub fn filled_rgb(width: usize, height: usize, rgb: [u8; 3]) -> Self {
        let data = rgb.iter().copied().cycle().take(width * height * 3).collect();
        Self::new(width, height, 3, data, "").expect("valid layout")
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn is_gray(&self) -> bool {
        self.channels == 1
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [u8] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    pub fn source_id(&self) -> &str {
        &self.source_id
    }

    pub fn with_source_id(mut self, id: impl Into<String>) -> Self {
        self.source_id = id.into();
        self
    }

    pub fn bounds(&self) -> BoundingBox {
        BoundingBox::new(0, 0, self.width, self.height).expect("non-empty image")
    }

    /// Pixel value as a slice of `channels` bytes.
    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> &[u8] {
        let i = (y * self.width + x) * self.channels;
        &self.data[i..i + self.channels]
    }

    #[inline]
    pub fn gray_at(&self, x: usize, y: usize) -> u8 {
        debug_assert!(self.is_gray());
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set_pixel(&mut self, x: usize, y: usize, value: &[u8]) {
        let i = (y * self.width + x) * self.channels;
        self.data[i..i + self.channels].copy_from_slice(value);
    }

    /// Copies the region covered by `bbox` into a new image with the same channel layout.
    pub fn crop(&self, bbox: &BoundingBox) -> Result<ScanImage> {
        if !self.bounds().contains_box(bbox) {
            return Err(Error::param(format!(
                "crop box {bbox:?} exceeds image {}x{}",
                self.width, self.height
            )));
        }
        let row_len = bbox.width() * self.channels;
        let mut data = Vec::with_capacity(row_len * bbox.height());
        for y in bbox.y_top..bbox.y_bottom {
            let start = (y * self.width + bbox.x_left) * self.channels;
            data.extend_from_slice(&self.data[start..start + row_len]);
        }
        ScanImage::new(
            bbox.width(),
            bbox.height(),
            self.channels,
            data,
            self.source_id.clone(),
        )
    }

    pub fn load(path: &Path) -> Result<ScanImage> {
        let decode_err = |reason: String| Error::Decode {
            path: path.to_path_buf(),
            reason,
        };
        let reader = ImageReader::open(path)
            .map_err(|e| decode_err(e.to_string()))?
            .with_guessed_format()
            .map_err(|e| decode_err(e.to_string()))?;
        let dynamic = reader.decode().map_err(|e| decode_err(e.to_string()))?;
        from_dynamic(dynamic, path.to_string_lossy().into_owned())
    }

    pub fn save_png(&self, path: &Path) -> Result<()> {
        let color = if self.is_gray() {
            image::ExtendedColorType::L8
        } else {
            image::ExtendedColorType::Rgb8
        };
        image::save_buffer_with_format(
            path,
            &self.data,
            self.width as u32,
            self.height as u32,
            color,
            image::ImageFormat::Png,
        )
        .map_err(|e| Error::Io(std::io::Error::other(e)))
    }
}

fn from_dynamic(dynamic: DynamicImage, source_id: String) -> Result<ScanImage> {
    let (w, h) = (dynamic.width() as usize, dynamic.height() as usize);
    match dynamic {
        DynamicImage::ImageLuma8(buf) => ScanImage::new(w, h, 1, buf.into_raw(), source_id),
        DynamicImage::ImageRgb8(buf) => ScanImage::new(w, h, 3, buf.into_raw(), source_id),
        DynamicImage::ImageLumaA8(_) => {
            ScanImage::new(w, h, 1, dynamic.to_luma8().into_raw(), source_id)
        }
        DynamicImage::ImageRgba8(_) => {
            ScanImage::new(w, h, 3, dynamic.to_rgb8().into_raw(), source_id)
        }
        DynamicImage::ImageLuma16(buf) => {
            ScanImage::new(w, h, 1, rescale_16(buf.as_raw(), 1, 1), source_id)
        }
        DynamicImage::ImageLumaA16(buf) => {
            ScanImage::new(w, h, 1, rescale_16(buf.as_raw(), 2, 1), source_id)
        }
        DynamicImage::ImageRgb16(buf) => {
            ScanImage::new(w, h, 3, rescale_16(buf.as_raw(), 3, 3), source_id)
        }
        DynamicImage::ImageRgba16(buf) => {
            ScanImage::new(w, h, 3, rescale_16(buf.as_raw(), 4, 3), source_id)
        }
        other => ScanImage::new(w, h, 3, other.to_rgb8().into_raw(), source_id),
    }
}

/// Linear min-max mapping of 16-bit samples onto 0..=255, dropping any
/// trailing alpha channel (`stride` samples per pixel, `keep` retained).
pub(crate) fn rescale_16(samples: &[u16], stride: usize, keep: usize) -> Vec<u8> {
    let kept = || {
        samples
            .chunks_exact(stride)
            .flat_map(move |px| px[..keep].iter().copied())
    };
    let (lo, hi) = kept().fold((u16::MAX, u16::MIN), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if hi <= lo {
        return kept().map(|_| 0).collect();
    }
    let span = f64::from(hi - lo);
    kept()
        .map(|v| ((f64::from(v - lo) * 255.0 / span).round()) as u8)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_layouts() {
        assert!(matches!(
            ScanImage::new(2, 2, 4, vec![0; 16], ""),
            Err(Error::Format(_))
        ));
        assert!(matches!(
            ScanImage::new(2, 2, 1, vec![0; 3], ""),
            Err(Error::Format(_))
        ));
        assert!(ScanImage::new(0, 2, 1, vec![], "").is_err());
    }

    #[test]
    fn sixteen_bit_rescale_is_min_max() {
        let out = rescale_16(&[1000, 2000, 3000], 1, 1);
        assert_eq!(out, vec![0, 128, 255]);
        // constant input collapses to zero rather than dividing by zero
        assert_eq!(rescale_16(&[7, 7], 1, 1), vec![0, 0]);
        // alpha dropped
        assert_eq!(rescale_16(&[0, 9, 10, 9], 2, 1), vec![0, 255]);
    }

    #[test]
    fn crop_copies_region() {
        let data: Vec<u8> = (0..12).collect();
        let img = ScanImage::new(4, 3, 1, data, "a").unwrap();
        let c = img.crop(&BoundingBox::new(1, 1, 3, 3).unwrap()).unwrap();
        assert_eq!(c.data(), &[5, 6, 9, 10]);
        assert!(img.crop(&BoundingBox::new(1, 1, 5, 3).unwrap()).is_err());
    }

    #[test]
    fn png_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.png");
        let img = ScanImage::new(3, 2, 3, (0..18).collect(), "").unwrap();
        img.save_png(&p).unwrap();
        let back = ScanImage::load(&p).unwrap();
        assert_eq!(back.data(), img.data());
        assert_eq!(back.channels(), 3);
    }

    #[test]
    fn garbage_file_is_decode_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.png");
        std::fs::write(&p, b"\x89PNG\r\n\x1a\nnot really").unwrap();
        assert!(matches!(ScanImage::load(&p), Err(Error::Decode { .. })));
    }
}
