use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::assess::{ExternalScorerConfig, FilterPolicy};
use crate::caption::{PatternLexicon, DEFAULT_TAU};
use crate::geometry::AxisRotation;
use crate::process::ProcessConfig;
use crate::raster::{PresetKind, RenderPreset};

pub const WORKERS_ENV: &str = "ORBITFORGE_WORKERS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Resolution {
    pub width: u32,
    pub height: u32,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PresetOverrides {
    #[serde(default)]
    pub coarse: Option<Resolution>,
    #[serde(default)]
    pub fine: Option<Resolution>,
}

impl PresetOverrides {
    pub fn preset(&self, kind: PresetKind) -> RenderPreset {
        let base = RenderPreset::for_kind(kind);
        let res = match kind {
            PresetKind::Coarse => self.coarse,
            PresetKind::Fine => self.fine,
        };
        match res {
            Some(r) => base.with_resolution(r.width, r.height),
            None => base,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScorerSelection {
    #[default]
    Builtin,
    External(ExternalScorerConfig),
}

impl ScorerSelection {
    /// Parses the CLI form: `builtin` or `cmd:PATH`.
    pub fn parse(s: &str) -> Result<ScorerSelection, PipelineError> {
        if s == "builtin" {
            Ok(ScorerSelection::Builtin)
        } else if let Some(path) = s.strip_prefix("cmd:").filter(|p| !p.is_empty()) {
            Ok(ScorerSelection::External(ExternalScorerConfig::new(path)))
        } else {
            Err(PipelineError::Config(format!("scorer must be `builtin` or `cmd:PATH`, got {s:?}")))
        }
    }
}

fn default_tau() -> f64 {
    DEFAULT_TAU
}

fn default_workers() -> usize {
    1
}

fn default_bin_width() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub input_dir: PathBuf,
    pub output_dir: PathBuf,
    /// Defaults to `output_dir/manifest.jsonl`.
    #[serde(default)]
    pub manifest: Option<PathBuf>,
    #[serde(default)]
    pub presets: PresetOverrides,
    #[serde(default)]
    pub policy: FilterPolicy,
    #[serde(default)]
    pub scorer: ScorerSelection,
    /// Built-in keyword list when absent.
    #[serde(default)]
    pub lexicon: Option<PathBuf>,
    #[serde(default = "default_tau")]
    pub tau: f64,
    /// External sentence-similarity provider; TF-cosine when absent.
    #[serde(default)]
    pub similarity: Option<ProcessConfig>,
    /// Caption files named `<asset_id>.txt` or `<source stem>.txt`.
    #[serde(default)]
    pub captions_dir: Option<PathBuf>,
    #[serde(default)]
    pub references_dir: Option<PathBuf>,
    #[serde(default = "default_workers")]
    pub workers: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub rotation: Option<AxisRotation>,
    #[serde(default = "default_bin_width")]
    pub bin_width: f64,
}

impl PipelineConfig {
    pub fn new(input_dir: impl Into<PathBuf>, output_dir: impl Into<PathBuf>) -> PipelineConfig {
        PipelineConfig {
            input_dir: input_dir.into(),
            output_dir: output_dir.into(),
            manifest: None,
            presets: PresetOverrides::default(),
            policy: FilterPolicy::default(),
            scorer: ScorerSelection::Builtin,
            lexicon: None,
            tau: DEFAULT_TAU,
            similarity: None,
            captions_dir: None,
            references_dir: None,
            workers: default_workers(),
            seed: 0,
            rotation: None,
            bin_width: default_bin_width(),
        }
    }

    /// Reads a JSON config; relative paths resolve against the file's directory.
    pub fn load(path: &Path) -> Result<PipelineConfig, PipelineError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
        let mut cfg: PipelineConfig =
            serde_json::from_str(&text).map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let rebase = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        rebase(&mut cfg.input_dir);
        rebase(&mut cfg.output_dir);
        for p in [&mut cfg.manifest, &mut cfg.lexicon, &mut cfg.captions_dir, &mut cfg.references_dir]
            .into_iter()
            .flatten()
        {
            rebase(p);
        }
        Ok(cfg)
    }

    pub fn manifest_path(&self) -> PathBuf {
        self.manifest.clone().unwrap_or_else(|| self.output_dir.join("manifest.jsonl"))
    }

    /// Applies the worker-count environment override.
    pub fn apply_env(&mut self) -> Result<(), PipelineError> {
        if let Ok(v) = std::env::var(WORKERS_ENV) {
            self.workers = v
                .trim()
                .parse()
                .map_err(|_| PipelineError::Config(format!("{WORKERS_ENV}={v:?} is not a count")))?;
        }
        Ok(())
    }

    pub fn preset(&self, kind: PresetKind) -> RenderPreset {
        self.presets.preset(kind)
    }

    pub fn load_lexicon(&self) -> Result<PatternLexicon, PipelineError> {
        match &self.lexicon {
            Some(p) => PatternLexicon::load(p).map_err(|e| PipelineError::Config(e.to_string())),
            None => Ok(PatternLexicon::default()),
        }
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: String| Err(PipelineError::Config(m));
        if self.workers == 0 {
            return bad("workers must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.tau) {
            return bad(format!("tau {} outside [0, 1]", self.tau));
        }
        if !(self.bin_width > 0.0 && self.bin_width.is_finite()) {
            return bad(format!("bin width {} must be positive", self.bin_width));
        }
        self.policy.validate().map_err(|e| PipelineError::Config(e.to_string()))?;
        for kind in [PresetKind::Coarse, PresetKind::Fine] {
            self.preset(kind).validate().map_err(|e| PipelineError::Config(e.to_string()))?;
        }
        if let ScorerSelection::External(s) = &self.scorer {
            if s.process.max_in_flight == 0 {
                return bad("scorer max_in_flight must be at least 1".into());
            }
        }
        if let Some(r) = &self.rotation {
            if !r.degrees.is_finite() {
                return bad("rotation must be finite".into());
            }
        }
        for dir in [&self.captions_dir, &self.references_dir].into_iter().flatten() {
            if !dir.is_dir() {
                return bad(format!("{} is not a directory", dir.display()));
            }
        }
        if self.captions_dir.is_some() != self.references_dir.is_some() {
            return bad("captions_dir and references_dir must be given together".into());
        }
        self.load_lexicon()?;
        Ok(())
    }
}
