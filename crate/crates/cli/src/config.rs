//! Run configuration documents.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::Deserialize;

use cfs_core::identities::CheckConfig;
use cfs_core::io::MeasureJson;
use cfs_core::minimize::MinimizeConfig;
use cfs_core::minkowski::{GaussianPacket, MomentumGrid, RecoveryTolerances, SampleGrid};
use cfs_core::{DiscreteMeasure, SystemConfig};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub system: Option<SystemConfig>,
    #[serde(default)]
    pub measure: Option<MeasureSource>,
    #[serde(default)]
    pub minimize: Option<MinimizeConfig>,
    #[serde(default)]
    pub minkowski: Option<MinkowskiConfig>,
    #[serde(default)]
    pub check: Option<CheckConfig>,
    #[serde(default)]
    pub output: OutputConfig,
}

/// A measure given either as a file or inline.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "lowercase")]
pub enum MeasureSource {
    /// Relative paths are resolved against the config file's directory.
    Path(PathBuf),
    Inline(MeasureJson),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MinkowskiConfig {
    #[serde(default = "MinkowskiConfig::default_mass")]
    pub mass: f64,
    #[serde(default)]
    pub momentum_grid: MomentumGrid,
    /// Number of (momentum, spin) modes taken from the grid.
    pub modes: usize,
    /// When present, one basis vector per packet instead of one per mode.
    #[serde(default)]
    pub packets: Option<Vec<GaussianPacket>>,
    pub epsilons: Vec<f64>,
    pub sample: SampleGrid,
    #[serde(default)]
    pub tolerances: RecoveryTolerances,
}

impl MinkowskiConfig {
    fn default_mass() -> f64 {
        1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Relative paths are resolved against the config file's directory.
    #[serde(default = "OutputConfig::default_dir")]
    pub dir: PathBuf,
    #[serde(default = "OutputConfig::default_formats")]
    pub formats: Vec<Format>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: Self::default_dir(),
            formats: Self::default_formats(),
        }
    }
}

impl OutputConfig {
    fn default_dir() -> PathBuf {
        PathBuf::from("cfs-out")
    }

    fn default_formats() -> Vec<Format> {
        vec![Format::Json, Format::Csv]
    }

    pub fn wants(&self, format: Format) -> bool {
        self.formats.contains(&format)
    }
}

/// A parsed configuration together with the directory it was read from.
pub struct LoadedConfig {
    pub run: RunConfig,
    pub base: PathBuf,
}

impl LoadedConfig {
    pub fn read(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read {}", path.display()))?;
        let run: RunConfig = serde_json::from_str(&text)
            .with_context(|| format!("invalid configuration {}", path.display()))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(LoadedConfig { run, base })
    }

    /// The measure section, checked against the `system` section if both exist.
    pub fn measure(&self) -> anyhow::Result<Option<DiscreteMeasure>> {
        let rho = match &self.run.measure {
            None => return Ok(None),
            Some(MeasureSource::Path(p)) => {
                let path = if p.is_absolute() {
                    p.clone()
                } else {
                    self.base.join(p)
                };
                cfs_core::io::load_measure(&path)?
            }
            Some(MeasureSource::Inline(m)) => m.clone().into_measure()?,
        };
        if let Some(system) = &self.run.system {
            if system != rho.config() {
                bail!("the system section does not match the measure's configuration");
            }
        }
        Ok(Some(rho))
    }

    pub fn require_measure(&self) -> anyhow::Result<DiscreteMeasure> {
        self.measure()?
            .ok_or_else(|| anyhow::anyhow!("this command needs a measure section"))
    }
}
