use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::artifacts::{CaliperConfig, DualViewConfig};
use crate::cropper::CropConfig;
use crate::error::{Error, Result};
use crate::filters::FilterConfig;
use crate::textkx::TextkxConfig;

/// Which stages run. Order is fixed: crop, filters, dualview, calipers, textkx.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Stages {
    pub crop: bool,
    pub filters: bool,
    pub dualview: bool,
    pub calipers: bool,
    pub textkx: bool,
}

impl Default for Stages {
    fn default() -> Self {
        Self {
            crop: true,
            filters: true,
            dualview: true,
            calipers: true,
            textkx: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineSection {
    pub workers: usize,
    /// Per-stage wall time in the manifest. Off by default because timings
    /// make otherwise identical runs differ.
    pub record_timings: bool,
    pub stages: Stages,
    /// Suffix for cropped images written with `--emit-crops`.
    pub crop_suffix: String,
    /// Input globs; the command line appends to these.
    pub inputs: Vec<String>,
}

impl Default for PipelineSection {
    fn default() -> Self {
        Self {
            workers: 1,
            record_timings: false,
            stages: Stages::default(),
            crop_suffix: "_crop".into(),
            inputs: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum OcrKind {
    /// Tokens replayed from a truth/manifest file, keyed by source id.
    #[default]
    Mock,
    /// Built-in reader for the embedded bitmap font.
    Font,
    /// External engine speaking the line protocol.
    Process,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct OcrConfig {
    pub backend: OcrKind,
    /// Program and arguments for the `process` backend.
    pub command: Vec<String>,
    /// JSONL records with `source_id` and `text.tokens`, for the `mock` backend.
    pub tokens_from: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub pipeline: PipelineSection,
    /// When cropping is on, filters, dual view and calipers see only the
    /// cropped scan area; the invalid-scan share is then relative to it.
    pub crop: CropConfig,
    pub filters: FilterConfig,
    pub dualview: DualViewConfig,
    pub calipers: CaliperConfig,
    pub textkx: TextkxConfig,
    pub ocr: OcrConfig,
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    pub fn validate(&self) -> Result<()> {
        let s = &self.pipeline.stages;
        if !(s.crop || s.filters || s.dualview || s.calipers || s.textkx) {
            return Err(Error::Config("every stage is disabled".into()));
        }
        if self.pipeline.workers == 0 {
            return Err(Error::Config("pipeline.workers must be at least 1".into()));
        }
        let as_config = |e: Error| match e {
            Error::Config(_) => e,
            other => Error::Config(other.to_string()),
        };
        self.crop.validate().map_err(as_config)?;
        self.filters.validate().map_err(as_config)?;
        self.dualview.validate().map_err(as_config)?;
        self.calipers.validate().map_err(as_config)?;
        self.textkx.validate().map_err(as_config)?;
        if s.textkx && self.ocr.backend == OcrKind::Process && self.ocr.command.is_empty() {
            return Err(Error::Config("ocr.command is required for the process backend".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let cfg = PipelineConfig::default();
        assert_eq!(PipelineConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
        assert_eq!(PipelineConfig::from_toml("").unwrap(), cfg);
    }

    #[test]
    fn sections_override_fields() {
        let cfg = PipelineConfig::from_toml(
            "[pipeline]\nworkers = 4\n[pipeline.stages]\ntextkx = false\n\
             [calipers]\nmethod = \"CONTOUR_PLUS_HOUGH\"\n[ocr]\nbackend = \"font\"\n",
        )
        .unwrap();
        assert_eq!(cfg.pipeline.workers, 4);
        assert!(!cfg.pipeline.stages.textkx && cfg.pipeline.stages.crop);
        assert_eq!(cfg.ocr.backend, OcrKind::Font);
    }

    #[test]
    fn rejects_bad_configs() {
        for bad in [
            "[pipeline]\nworkers = 0\n",
            "[pipeline.stages]\ncrop=false\nfilters=false\ndualview=false\ncalipers=false\ntextkx=false\n",
            "[ocr]\nbackend = \"process\"\n",
            "[pipeline]\nworkerz = 2\n",
            "[textkx.patterns]\nright = []\n",
        ] {
            assert!(matches!(PipelineConfig::from_toml(bad), Err(Error::Config(_))), "{bad}");
        }
    }
}
