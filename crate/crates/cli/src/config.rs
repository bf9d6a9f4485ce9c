use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use periwave_core::dispersion::{DEFAULT_K_SAMPLES, GAP_FLOOR};
use periwave_core::geometry::{CellSpec, Resolution};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub cell: CellSpec,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default = "default_resolution")]
    pub resolution: f64,
    #[serde(default)]
    pub outputs: OutputConfig,
    /// Recorded in the manifest; the solver's own start vectors are fixed.
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default = "default_n_k")]
    pub n_k: usize,
    #[serde(default = "default_n_bands")]
    pub n_bands: usize,
    /// Ceiling for gap search, in normalized frequency.
    #[serde(default = "default_f_max")]
    pub f_max: f64,
    #[serde(default = "default_gap_floor")]
    pub gap_floor: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            n_k: default_n_k(),
            n_bands: default_n_bands(),
            f_max: default_f_max(),
            gap_floor: default_gap_floor(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Svg,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_directory")]
    pub directory: PathBuf,
    #[serde(default = "default_formats")]
    pub formats: Vec<Format>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { directory: default_directory(), formats: default_formats() }
    }
}

fn default_resolution() -> f64 {
    1.0
}
fn default_n_k() -> usize {
    DEFAULT_K_SAMPLES
}
fn default_n_bands() -> usize {
    8
}
fn default_f_max() -> f64 {
    0.2
}
fn default_gap_floor() -> f64 {
    GAP_FLOOR
}
fn default_directory() -> PathBuf {
    PathBuf::from("out")
}
fn default_formats() -> Vec<Format> {
    vec![Format::Csv, Format::Json]
}

impl RunConfig {
    /// Parses and validates; errors carry the JSON path of the offending field.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            anyhow::anyhow!("config at `{path}`: {}", e.into_inner())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.cell.validate().context("cell")?;
        self.resolution().validate().context("resolution")?;
        let s = &self.sweep;
        if s.n_k < 2 {
            bail!("sweep.n_k: at least 2 samples are needed, got {}", s.n_k);
        }
        if s.n_bands == 0 {
            bail!("sweep.n_bands: must be at least 1");
        }
        if !(s.f_max > 0.0 && s.f_max.is_finite()) {
            bail!("sweep.f_max: must be positive, got {}", s.f_max);
        }
        if !(s.gap_floor >= 0.0) {
            bail!("sweep.gap_floor: must be non-negative, got {}", s.gap_floor);
        }
        if self.outputs.formats.is_empty() {
            bail!("outputs.formats: at least one format is required");
        }
        Ok(())
    }

    pub fn resolution(&self) -> Resolution {
        Resolution(self.resolution)
    }

    pub fn wants(&self, f: Format) -> bool {
        self.outputs.formats.contains(&f)
    }
}
