//! Artifact detection: lesion calipers and dual-view frames.

mod calipers;
mod dualview;

pub use calipers::{
    caliper_edge_mask, detect_calipers, intersecting_pair, unmasked_region, CaliperConfig,
    CaliperMethod, CaliperReport,
};
pub use dualview::{
    detect_dual_view, midline_columns, split_dual_view, DualView, DualViewConfig,
};
