//! Shared fixtures for the criterion benches.

use bus_curate::synthgen::{corpus, dotted_caliper_scene, render, Mix};
use bus_curate::ScanImage;

/// A few default-mix scenes, rendered once.
pub fn scenes(n: usize) -> Vec<ScanImage> {
    corpus(17, n, &Mix::default())
        .expect("corpus renders")
        .into_iter()
        .map(|(img, _)| img)
        .collect()
}

/// One scene with a dotted caliper line, the Hough fallback's worst case.
pub fn dotted() -> ScanImage {
    let item = dotted_caliper_scene(17, 0);
    render(&item.spec, &item.id).expect("scene renders").0
}
