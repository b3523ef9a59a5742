use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use crossbeam_channel::{bounded, unbounded};

use super::config::{OcrKind, PipelineConfig};
use super::report::{ScanReport, Status};
use super::score::RunSummary;
use crate::artifacts::{detect_calipers, detect_dual_view, DualView};
use crate::cropper::crop_scan;
use crate::error::{Error, Result};
use crate::filters::{detect_invalid, detect_non_b_mode, FilterVerdict};
use crate::imgprim::ScanImage;
use crate::textkx::{
    detect_text_presence, recognize_text, FontBackend, Grammar, MockBackend, OcrBackend, OcrToken,
    ProcessBackend,
};

/// Everything the pipeline needs besides the image, built once per run.
pub struct Analyzer {
    cfg: PipelineConfig,
    grammar: Grammar,
}

impl Analyzer {
    pub fn new(cfg: PipelineConfig) -> Result<Self> {
        cfg.validate()?;
        let grammar = cfg.textkx.grammar()?;
        Ok(Self { cfg, grammar })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.cfg
    }

    /// Runs the enabled stages in order. Stage failures other than OCR are
    /// recorded in `error` and leave that stage's field empty.
    pub fn analyze(&self, img: &ScanImage, ocr: Option<&mut dyn OcrBackend>) -> ScanReport {
        self.analyze_with_crop(img, ocr).0
    }

    /// As [`Analyzer::analyze`], also returning the cropped scan area when
    /// cropping ran.
    pub fn analyze_with_crop(
        &self,
        img: &ScanImage,
        ocr: Option<&mut dyn OcrBackend>,
    ) -> (ScanReport, Option<ScanImage>) {
        let cfg = &self.cfg;
        let stages = cfg.pipeline.stages;
        let mut timings = BTreeMap::new();
        let mut errors: Vec<String> = Vec::new();
        let mut report = ScanReport {
            source_id: img.source_id().to_string(),
            width: img.width(),
            height: img.height(),
            ..ScanReport::default()
        };
        let mut clock = Instant::now();
        let mut lap = |name: &str, timings: &mut BTreeMap<String, f64>| {
            let now = Instant::now();
            timings.insert(name.to_string(), (now - clock).as_secs_f64() * 1e3);
            clock = now;
        };

        let mut cropped: Option<ScanImage> = None;
        if stages.crop {
            match crop_scan(img, &cfg.crop).and_then(|c| Ok((img.crop(&c.final_box)?, c))) {
                Ok((sub, c)) => {
                    report.crop = Some(c);
                    cropped = Some(sub);
                }
                Err(e) => errors.push(format!("crop: {e}")),
            }
            lap("crop", &mut timings);
        }
        let origin = report
            .crop
            .map_or((0, 0), |c| (c.final_box.x_left, c.final_box.y_top));
        let area = cropped.as_ref().unwrap_or(img);

        if stages.filters {
            let verdict = detect_invalid(area, &cfg.filters, None).and_then(|inv| {
                let nb = detect_non_b_mode(area, &cfg.filters)?;
                Ok(FilterVerdict {
                    invalid: inv.invalid,
                    black_fraction: inv.black_fraction,
                    ..nb
                })
            });
            match verdict {
                Ok(v) => report.filter = Some(v),
                Err(e) => errors.push(format!("filters: {e}")),
            }
            lap("filters", &mut timings);
        }
        if stages.dualview {
            match detect_dual_view(area, &cfg.dualview, &cfg.filters) {
                Ok(d) => {
                    report.dual_view = Some(DualView {
                        flag: d.flag,
                        split_x: d.split_x.map(|x| x + origin.0),
                    })
                }
                Err(e) => errors.push(format!("dualview: {e}")),
            }
            lap("dualview", &mut timings);
        }
        if stages.calipers {
            match detect_calipers(area, &cfg.calipers) {
                Ok(c) => report.calipers = Some(c.translate(origin.0, origin.1)),
                Err(e) => errors.push(format!("calipers: {e}")),
            }
            lap("calipers", &mut timings);
        }
        if stages.textkx {
            match ocr {
                None => {
                    report.status = Status::OcrSkipped;
                    errors.push("textkx: no OCR backend".into());
                }
                Some(backend) => match recognize_text(img, backend, cfg.textkx.min_confidence) {
                    Ok(tokens) => {
                        report.text_present = Some(detect_text_presence(&tokens));
                        report.text = Some(self.grammar.classify(&tokens));
                    }
                    Err(e) => {
                        report.status = Status::OcrSkipped;
                        errors.push(format!("textkx: {e}"));
                    }
                },
            }
            lap("textkx", &mut timings);
        }

        if cfg.pipeline.record_timings {
            report.timings = Some(timings);
        }
        if !errors.is_empty() {
            report.error = Some(errors.join("; "));
        }
        (report, cropped)
    }
}

/// Record for an input that could not be decoded.
pub fn decode_error_report(source_id: &str, e: &Error) -> ScanReport {
    ScanReport {
        source_id: source_id.to_string(),
        status: Status::DecodeError,
        error: Some(e.to_string()),
        ..ScanReport::default()
    }
}

/// Source id of an input file: its name without extension.
pub fn source_id_of(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.to_string_lossy().into_owned())
}

/// Expands globs into a sorted, de-duplicated file list.
pub fn expand_inputs(patterns: &[String]) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for p in patterns {
        let paths =
            glob::glob(p).map_err(|e| Error::Config(format!("bad input pattern {p:?}: {e}")))?;
        for entry in paths {
            let path = entry.map_err(|e| Error::Io(e.into()))?;
            if path.is_file() {
                out.push(path);
            }
        }
    }
    out.sort();
    out.dedup();
    Ok(out)
}

/// Reads `source_id -> text.tokens` from manifest-shaped JSONL.
pub fn load_tokens(path: &Path) -> Result<HashMap<String, Vec<OcrToken>>> {
    let file = File::open(path)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let mut out = HashMap::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let r: ScanReport = serde_json::from_str(&line)
            .map_err(|e| Error::Config(format!("{}:{}: {e}", path.display(), i + 1)))?;
        out.insert(r.source_id, r.text.map(|t| t.tokens).unwrap_or_default());
    }
    Ok(out)
}

type BackendFactory = Arc<dyn Fn() -> Result<Box<dyn OcrBackend>> + Send + Sync>;

fn backend_factory(cfg: &PipelineConfig) -> Result<Option<BackendFactory>> {
    if !cfg.pipeline.stages.textkx {
        return Ok(None);
    }
    Ok(Some(match cfg.ocr.backend {
        OcrKind::Mock => {
            let tokens = match &cfg.ocr.tokens_from {
                Some(p) => load_tokens(p)?,
                None => HashMap::new(),
            };
            let mock = MockBackend::from_map(tokens);
            Arc::new(move || Ok(Box::new(mock.clone()) as Box<dyn OcrBackend>))
        }
        OcrKind::Font => Arc::new(|| Ok(Box::new(FontBackend::default()) as Box<dyn OcrBackend>)),
        OcrKind::Process => {
            let command = cfg.ocr.command.clone();
            Arc::new(move || Ok(Box::new(ProcessBackend::spawn(&command)?) as Box<dyn OcrBackend>))
        }
    }))
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub inputs: Vec<PathBuf>,
    pub manifest: PathBuf,
    pub emit_crops: Option<PathBuf>,
}

/// Processes every input and writes one manifest line per input, in input
/// order. Per-image failures are recorded, never fatal; an unusable config,
/// manifest path or crop directory is.
pub fn run(cfg: &PipelineConfig, opts: &RunOptions) -> Result<RunSummary> {
    let analyzer = Arc::new(Analyzer::new(cfg.clone())?);
    let factory = backend_factory(cfg)?;
    let file = File::create(&opts.manifest)
        .map_err(|e| Error::Config(format!("manifest {}: {e}", opts.manifest.display())))?;
    if let Some(dir) = &opts.emit_crops {
        std::fs::create_dir_all(dir)
            .map_err(|e| Error::Config(format!("crop directory {}: {e}", dir.display())))?;
    }
    let mut sink = BufWriter::new(file);
    let mut summary = RunSummary::default();

    let workers = cfg.pipeline.workers.min(opts.inputs.len()).max(1);
    let (job_tx, job_rx) = bounded::<(usize, PathBuf)>(workers * 4);
    let (done_tx, done_rx) = unbounded::<(usize, ScanReport)>();

    std::thread::scope(|s| -> Result<()> {
        for _ in 0..workers {
            let (job_rx, done_tx) = (job_rx.clone(), done_tx.clone());
            let analyzer = Arc::clone(&analyzer);
            let factory = factory.clone();
            let emit = opts.emit_crops.clone();
            s.spawn(move || {
                let mut backend: Option<Box<dyn OcrBackend>> = None;
                for (i, path) in job_rx {
                    if backend.is_none() {
                        backend = factory.as_ref().and_then(|f| match f() {
                            Ok(b) => Some(b),
                            Err(e) => {
                                log::warn!("OCR backend unavailable: {e}");
                                None
                            }
                        });
                    }
                    let report = process_one(&analyzer, &path, &mut backend, emit.as_deref());
                    if done_tx.send((i, report)).is_err() {
                        return;
                    }
                }
            });
        }
        drop(done_tx);
        drop(job_rx);

        let inputs = opts.inputs.clone();
        s.spawn(move || {
            for job in inputs.into_iter().enumerate() {
                if job_tx.send(job).is_err() {
                    return;
                }
            }
        });

        // reorder buffer: records go out in input order
        let mut pending: BTreeMap<usize, ScanReport> = BTreeMap::new();
        let mut next = 0;
        for (i, report) in done_rx {
            pending.insert(i, report);
            while let Some(r) = pending.remove(&next) {
                summary.add(&r);
                serde_json::to_writer(&mut sink, &r)?;
                sink.write_all(b"\n")?;
                next += 1;
            }
        }
        Ok(())
    })?;
    sink.flush()?;
    Ok(summary)
}

fn process_one(
    analyzer: &Analyzer,
    path: &Path,
    backend: &mut Option<Box<dyn OcrBackend>>,
    emit: Option<&Path>,
) -> ScanReport {
    let id = source_id_of(path);
    let img = match ScanImage::load(path) {
        Ok(img) => img.with_source_id(id.clone()),
        Err(e) => return decode_error_report(&id, &e),
    };
    let ocr = backend.as_deref_mut().map(|b| b as &mut dyn OcrBackend);
    let (mut report, cropped) = analyzer.analyze_with_crop(&img, ocr);
    if report.status == Status::OcrSkipped {
        // a failed engine is restarted for the next image
        *backend = None;
    }
    if let (Some(dir), Some(sub)) = (emit, cropped) {
        let suffix = &analyzer.config().pipeline.crop_suffix;
        let out = dir.join(format!("{id}{suffix}.png"));
        if let Err(e) = sub.save_png(&out) {
            let msg = format!("crop output: {e}");
            report.error = Some(match report.error.take() {
                Some(prev) => format!("{prev}; {msg}"),
                None => msg,
            });
        }
    }
    report
}

/// Reads a manifest (or truth file) back.
pub fn read_manifest(path: &Path) -> Result<Vec<ScanReport>> {
    let file = File::open(path)?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let r = serde_json::from_str(&line).map_err(|e| {
            Error::Format(format!("{}:{}: {e}", path.display(), i + 1))
        })?;
        out.push(r);
    }
    Ok(out)
}
