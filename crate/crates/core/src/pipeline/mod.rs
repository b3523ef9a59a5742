//! Batch orchestration: configuration, the per-image stage runner, the
//! manifest, and scoring against ground truth.

mod config;
mod report;
mod run;
mod score;

pub use config::{OcrConfig, OcrKind, PipelineConfig, PipelineSection, Stages};
pub use report::{ScanReport, Status};
pub use run::{
    decode_error_report, expand_inputs, load_tokens, read_manifest, run, source_id_of, Analyzer,
    RunOptions,
};
pub use score::{score, Category, Confusion, RunSummary};
