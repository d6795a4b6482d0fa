use std::path::Path;

use clap::Args;
use dif_core::detector::{DEFAULT_T_HIGH, DEFAULT_T_SYM};
use dif_core::{CorrelationScope, DenoiserConfig, DifError, ExtractionConfig, LossForm, Result};
use dif_nn::Arch;
use serde::{Deserialize, Serialize};

/// Every tunable of a run. Loaded from `--config` if given, then
/// overridden by flags, then echoed into the provenance file.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub denoiser: DenoiserConfig,
    pub extraction: ExtractionConfig,
    pub lineage: LineageConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LineageConfig {
    pub t_high: f64,
    pub t_sym: f64,
}

impl Default for LineageConfig {
    fn default() -> Self {
        Self {
            t_high: DEFAULT_T_HIGH,
            t_sym: DEFAULT_T_SYM,
        }
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| DifError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| DifError::Config(format!("config {}: {e}", path.display())))
    }
}

#[derive(Args, Debug, Default, Clone)]
pub struct DenoiserFlags {
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long = "denoiser-lr")]
    pub lr: Option<f64>,
    #[arg(long)]
    pub crop: Option<usize>,
    /// Noise range in 1/255 units, e.g. `5,15`.
    #[arg(long, value_delimiter = ',', num_args = 2)]
    pub sigma_range: Option<Vec<f64>>,
    #[arg(long)]
    pub images: Option<usize>,
    #[arg(long = "denoiser-batch")]
    pub batch: Option<usize>,
    #[arg(long)]
    pub depth: Option<usize>,
    #[arg(long)]
    pub width: Option<usize>,
    #[arg(long)]
    pub pad: Option<usize>,
}

impl DenoiserFlags {
    pub fn apply(&self, c: &mut DenoiserConfig, seed: Option<u64>) {
        set(&mut c.epochs, self.epochs);
        set(&mut c.lr, self.lr);
        set(&mut c.crop, self.crop);
        if let Some(r) = &self.sigma_range {
            c.sigma_range = [r[0], r[1]];
        }
        set(&mut c.images, self.images);
        set(&mut c.batch, self.batch);
        set(&mut c.depth, self.depth);
        set(&mut c.width, self.width);
        set(&mut c.pad, self.pad);
        set(&mut c.seed, seed);
    }
}

#[derive(Args, Debug, Default, Clone)]
pub struct ExtractionFlags {
    #[arg(long)]
    pub arch: Option<Arch>,
    #[arg(long)]
    pub margin: Option<f64>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub ema_decay: Option<f64>,
    /// Residuals per class per step.
    #[arg(long)]
    pub batch: Option<usize>,
    #[arg(long, value_parser = parse_scope)]
    pub scope: Option<CorrelationScope>,
    #[arg(long, value_parser = parse_loss)]
    pub loss: Option<LossForm>,
}

impl ExtractionFlags {
    pub fn apply(&self, c: &mut ExtractionConfig, seed: Option<u64>) {
        set(&mut c.arch, self.arch);
        set(&mut c.margin, self.margin);
        set(&mut c.lr, self.lr);
        set(&mut c.steps, self.steps);
        set(&mut c.ema_decay, self.ema_decay);
        set(&mut c.batch, self.batch);
        set(&mut c.scope, self.scope);
        set(&mut c.loss, self.loss);
        set(&mut c.seed, seed);
    }
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

fn parse_scope(s: &str) -> std::result::Result<CorrelationScope, String> {
    match s {
        "per-channel" => Ok(CorrelationScope::PerChannel),
        "whole-tensor" => Ok(CorrelationScope::WholeTensor),
        _ => Err(format!("unknown scope '{s}' (per-channel, whole-tensor)")),
    }
}

fn parse_loss(s: &str) -> std::result::Result<LossForm, String> {
    match s {
        "literal" => Ok(LossForm::Literal),
        "hinged" => Ok(LossForm::Hinged),
        _ => Err(format!("unknown loss form '{s}' (literal, hinged)")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_json_keeps_defaults() {
        let c: RunConfig = serde_json::from_str(r#"{"extraction": {"steps": 7}}"#).unwrap();
        assert_eq!(c.extraction.steps, 7);
        assert_eq!(c.extraction.margin, 0.01);
        assert_eq!(c.denoiser, DenoiserConfig::default());
    }

    #[test]
    fn flags_override() {
        let mut c = ExtractionConfig::default();
        let f = ExtractionFlags {
            steps: Some(3),
            ..Default::default()
        };
        f.apply(&mut c, Some(9));
        assert_eq!((c.steps, c.seed, c.lr), (3, 9, 5e-4));
    }
}
