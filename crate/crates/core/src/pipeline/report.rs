use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::artifacts::{CaliperReport, DualView};
use crate::cropper::CropResult;
use crate::filters::FilterVerdict;
use crate::textkx::TextAnnotation;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Status {
    #[default]
    Ok,
    DecodeError,
    /// Every other stage ran; the OCR backend failed for this image.
    OcrSkipped,
}

/// One manifest line. Stage fields are absent when the stage was disabled
/// or the image could not be decoded. Boxes and `split_x` are in original
/// image coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct ScanReport {
    pub source_id: String,
    pub width: usize,
    pub height: usize,
    pub status: Status,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub crop: Option<CropResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub filter: Option<FilterVerdict>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dual_view: Option<DualView>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub calipers: Option<CaliperReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text_present: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<TextAnnotation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timings: Option<BTreeMap<String, f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}
