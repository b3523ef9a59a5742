//! Curation toolkit for clinical breast-ultrasound still images.
//!
//! The crate flags invalid and enhanced-mode scans, detects lesion calipers
//! and dual-view frames, crops to the scan area, and extracts burnt-in
//! annotation fields through a pluggable OCR backend. A deterministic scene
//! generator provides labelled images for testing every detector, and the
//! [`pipeline`] module wires the stages into a batch runner that writes a
//! line-delimited manifest.

pub mod artifacts;
pub mod cropper;
pub mod error;
pub mod filters;
pub mod font;
pub mod textkx;
pub mod imgprim;
pub mod pipeline;
pub mod synthgen;

pub use error::{Error, Result};
pub use imgprim::{BinaryMask, BoundingBox, HsvRange, ScanImage};
