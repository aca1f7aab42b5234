//! Scene files: one model, an order `r`, and optional flow and output sections.

use std::path::{Path, PathBuf};

use newton_flow::catalog::HypersurfaceModel;
use newton_flow::flow::{FlowConfig, Scheme, DEFAULT_CFL_SAFETY};
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const DEFAULT_RESOLUTION: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneConfig {
    pub model: HypersurfaceModel,
    pub r: usize,
    #[serde(default = "default_resolution")]
    pub resolution: usize,
    #[serde(default)]
    pub flow: Option<FlowSection>,
    #[serde(default)]
    pub output: OutputSection,
}

fn default_resolution() -> usize {
    DEFAULT_RESOLUTION
}

/// Flow settings; model, `r` and resolution come from the scene.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowSection {
    pub t_end: f64,
    #[serde(default = "default_safety")]
    pub cfl_safety: f64,
    #[serde(default)]
    pub rescaled: bool,
    #[serde(default)]
    pub scheme: Scheme,
    #[serde(default = "default_stride")]
    pub output_stride: usize,
    #[serde(default)]
    pub resample_every: Option<usize>,
}

fn default_safety() -> f64 {
    DEFAULT_CFL_SAFETY
}

fn default_stride() -> usize {
    1
}

/// Output destinations. Unset paths fall back to stdout.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    /// JSON report (`gap`, `residual`, `verify`).
    #[serde(default)]
    pub report: Option<PathBuf>,
    /// Diagnostics CSV (`flow`).
    #[serde(default)]
    pub csv: Option<PathBuf>,
    /// Run summary JSON (`flow`).
    #[serde(default)]
    pub summary: Option<PathBuf>,
}

impl SceneConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Parse(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let scene: Self = serde_json::from_str(text).map_err(|e| CliError::Parse(format!("scene: {e}")))?;
        scene.model.validate()?;
        Ok(scene)
    }

    pub fn flow_config(&self, t_end: Option<f64>) -> Result<FlowConfig, CliError> {
        let section = match (&self.flow, t_end) {
            (Some(s), Some(t)) => FlowSection { t_end: t, ..s.clone() },
            (Some(s), None) => s.clone(),
            (None, Some(t)) => FlowSection {
                t_end: t,
                cfl_safety: DEFAULT_CFL_SAFETY,
                rescaled: false,
                scheme: Scheme::default(),
                output_stride: 1,
                resample_every: None,
            },
            (None, None) => return Err(CliError::Parse("scene has no flow section and no --t-end was given".into())),
        };
        let config = FlowConfig {
            r: self.r,
            model: self.model.clone(),
            t_end: section.t_end,
            cfl_safety: section.cfl_safety,
            resolution: self.resolution,
            rescaled: section.rescaled,
            scheme: section.scheme,
            output_stride: section.output_stride,
            resample_every: section.resample_every,
        };
        config.validate()?;
        Ok(config)
    }
}
