use std::hint::black_box;

use bus_curate::artifacts::{detect_calipers, detect_dual_view, CaliperConfig, DualViewConfig};
use bus_curate::cropper::{crop_scan, CropConfig};
use bus_curate::filters::FilterConfig;
use bus_curate::imgprim::{canny_edges, to_grayscale};
use bus_curate::pipeline::{Analyzer, PipelineConfig};
use bus_curate_bench::{dotted, scenes};
use criterion::{criterion_group, criterion_main, Criterion};

fn primitives(c: &mut Criterion) {
    let img = &scenes(1)[0];
    let gray = to_grayscale(img);
    c.bench_function("canny", |b| {
        b.iter(|| canny_edges(black_box(&gray), 50.0, 150.0).unwrap())
    });
}

fn detectors(c: &mut Criterion) {
    let imgs = scenes(8);
    let crop = CropConfig::default();
    let cal = CaliperConfig::default();
    let dual = DualViewConfig::default();
    let shape = FilterConfig::default();
    c.bench_function("crop_scan x8", |b| {
        b.iter(|| imgs.iter().map(|i| crop_scan(i, &crop).unwrap()).count())
    });
    c.bench_function("detect_calipers x8", |b| {
        b.iter(|| imgs.iter().map(|i| detect_calipers(i, &cal).unwrap()).count())
    });
    c.bench_function("detect_dual_view x8", |b| {
        b.iter(|| imgs.iter().map(|i| detect_dual_view(i, &dual, &shape).unwrap()).count())
    });
    let d = dotted();
    c.bench_function("detect_calipers dotted", |b| {
        b.iter(|| detect_calipers(black_box(&d), &cal).unwrap())
    });
}

fn pipeline(c: &mut Criterion) {
    let imgs = scenes(8);
    let mut cfg = PipelineConfig::default();
    cfg.pipeline.stages.textkx = false;
    let analyzer = Analyzer::new(cfg).unwrap();
    c.bench_function("analyze x8 (no text)", |b| {
        b.iter(|| imgs.iter().map(|i| analyzer.analyze(i, None)).count())
    });
}

criterion_group!(benches, primitives, detectors, pipeline);
criterion_main!(benches);
