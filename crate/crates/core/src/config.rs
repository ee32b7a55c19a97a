//! Pipeline configuration file and its resolution against command-line overrides.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fuse::FusionConfig;
use crate::segment::FcmConfig;
use crate::simulate::{linear_grid, SimulationConfig};
use crate::unmix::NmfConfig;

/// Target wavelength grid for simulation: an explicit list or an even spacing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WavelengthGrid {
    List(Vec<f64>),
    Linear { start_nm: f64, end_nm: f64, count: usize },
}

impl WavelengthGrid {
    pub fn to_vec(&self) -> Vec<f64> {
        match self {
            WavelengthGrid::List(v) => v.clone(),
            WavelengthGrid::Linear {
                start_nm,
                end_nm,
                count,
            } => linear_grid(*start_nm, *end_nm, *count),
        }
    }
}

impl Default for WavelengthGrid {
    fn default() -> Self {
        WavelengthGrid::Linear {
            start_nm: 400.0,
            end_nm: 2450.0,
            count: 50,
        }
    }
}

/// Input and output locations. Relative paths are taken relative to the config
/// file's directory (or the working directory when given on the command line).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Paths {
    #[serde(default)]
    pub labels: Option<PathBuf>,
    #[serde(default)]
    pub library: Option<PathBuf>,
    /// Output directory for every stage.
    #[serde(default)]
    pub out: Option<PathBuf>,
    /// Overrides for stage inputs that otherwise come from `out`.
    #[serde(default)]
    pub lowres_cube: Option<PathBuf>,
    #[serde(default)]
    pub pan: Option<PathBuf>,
    #[serde(default)]
    pub reference: Option<PathBuf>,
    #[serde(default)]
    pub estimate: Option<PathBuf>,
    /// Label map whose zeros are excluded from SAE.
    #[serde(default)]
    pub mask: Option<PathBuf>,
}

fn default_fusion() -> FusionConfig {
    FusionConfig::new(3)
}

fn default_nmf() -> NmfConfig {
    NmfConfig::new(0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    /// Master seed; every stochastic stage derives its own seed from it.
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_threads")]
    pub threads: usize,
    #[serde(default)]
    pub paths: Paths,
    #[serde(default)]
    pub wavelengths: WavelengthGrid,
    #[serde(default)]
    pub simulation: SimulationConfig,
    #[serde(default = "default_nmf")]
    pub unmix: NmfConfig,
    #[serde(default)]
    pub segment: FcmConfig,
    #[serde(default = "default_fusion")]
    pub fusion: FusionConfig,
}

fn default_threads() -> usize {
    1
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            threads: 1,
            paths: Paths::default(),
            wavelengths: WavelengthGrid::default(),
            simulation: SimulationConfig::default(),
            unmix: default_nmf(),
            segment: FcmConfig::default(),
            fusion: default_fusion(),
        }
    }
}

/// Command-line values that take precedence over the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub scale: Option<usize>,
    pub endmembers: Option<usize>,
    pub snr_db: Option<f64>,
    pub abundance_threshold: Option<f64>,
    pub distinct_delta: Option<f64>,
    pub out: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub library: Option<PathBuf>,
    pub reference: Option<PathBuf>,
    pub estimate: Option<PathBuf>,
    pub mask: Option<PathBuf>,
}

/// SplitMix64 finalizer applied to `master + stream·φ`.
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    let mut z = master.wrapping_add(stream.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

const SEED_STREAM_SIMULATE: u64 = 1;
const SEED_STREAM_UNMIX: u64 = 2;
const SEED_STREAM_SEGMENT: u64 = 3;

/// A config with overrides applied, seeds derived and a base directory for paths.
#[derive(Debug, Clone)]
pub struct ResolvedConfig {
    pub config: PipelineConfig,
    pub base_dir: PathBuf,
}

impl ResolvedConfig {
    pub fn load(config_path: Option<&Path>, overrides: &Overrides) -> Result<Self> {
        let (config, base_dir) = match config_path {
            Some(p) => {
                let cfg: PipelineConfig = crate::io::read_json(p)?;
                let base = p
                    .parent()
                    .filter(|d| !d.as_os_str().is_empty())
                    .map(Path::to_path_buf)
                    .unwrap_or_else(|| PathBuf::from("."));
                (cfg, base)
            }
            None => (PipelineConfig::default(), PathBuf::from(".")),
        };
        Self::resolve(config, base_dir, overrides)
    }

    pub fn resolve(mut config: PipelineConfig, base_dir: PathBuf, o: &Overrides) -> Result<Self> {
        if let Some(v) = o.seed {
            config.seed = v;
        }
        if let Some(v) = o.threads {
            config.threads = v;
        }
        if let Some(v) = o.scale {
            config.simulation.scale = v;
        }
        if let Some(v) = o.endmembers {
            config.unmix.endmembers = v;
        }
        if let Some(v) = o.snr_db {
            config.simulation.snr_db = Some(v);
        }
        if let Some(v) = o.abundance_threshold {
            config.fusion.abundance_threshold = v;
        }
        if let Some(v) = o.distinct_delta {
            config.fusion.distinct_delta = v;
        }
        // paths given on the command line are relative to the working directory
        let cwd = |p: &PathBuf| -> PathBuf {
            if p.is_absolute() {
                p.clone()
            } else {
                std::env::current_dir().map(|d| d.join(p)).unwrap_or_else(|_| p.clone())
            }
        };
        for (src, dst) in [
            (&o.out, &mut config.paths.out),
            (&o.labels, &mut config.paths.labels),
            (&o.library, &mut config.paths.library),
            (&o.reference, &mut config.paths.reference),
            (&o.estimate, &mut config.paths.estimate),
            (&o.mask, &mut config.paths.mask),
        ] {
            if let Some(p) = src {
                *dst = Some(cwd(p));
            }
        }

        config.fusion.scale = config.simulation.scale;
        config.simulation.seed = derive_seed(config.seed, SEED_STREAM_SIMULATE);
        config.unmix.seed = derive_seed(config.seed, SEED_STREAM_UNMIX);
        config.segment.seed = derive_seed(config.seed, SEED_STREAM_SEGMENT);
        if config.unmix.endmembers == 0 {
            let mut materials: Vec<&String> = config.simulation.class_mapping.values().collect();
            materials.sort();
            materials.dedup();
            config.unmix.endmembers = materials.len();
        }
        if config.threads == 0 {
            return Err(Error::Config("threads must be >= 1".into()));
        }
        config.simulation.validate()?;
        config.unmix.validate()?;
        config.segment.validate()?;
        config.fusion.validate()?;
        Ok(Self { config, base_dir })
    }

    pub fn resolve_path(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn out_dir(&self) -> PathBuf {
        self.resolve_path(self.config.paths.out.as_deref().unwrap_or(Path::new("out")))
    }

    pub fn required(&self, value: &Option<PathBuf>, what: &str) -> Result<PathBuf> {
        value
            .as_deref()
            .map(|p| self.resolve_path(p))
            .ok_or_else(|| Error::Config(format!("no {what} path configured")))
    }

    pub fn optional(&self, value: &Option<PathBuf>, default_name: &str) -> PathBuf {
        value
            .as_deref()
            .map(|p| self.resolve_path(p))
            .unwrap_or_else(|| self.out_dir().join(default_name))
    }
}
