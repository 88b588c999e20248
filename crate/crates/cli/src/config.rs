//! Run configuration: flags override the config file, which overrides defaults.

use std::path::{Path, PathBuf};

use multatlas_core::orbit::OrbitFinderConfig;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Contents of a `--config` TOML file. Every key is optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub out_dir: Option<PathBuf>,
    #[serde(default)]
    pub finder: Option<OrbitFinderConfig>,
    #[serde(default)]
    pub orbits: OrbitsFile,
    #[serde(default)]
    pub yc: YcFile,
    #[serde(default)]
    pub xset: XsetFile,
    #[serde(default)]
    pub verify: VerifyFile,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrbitsFile {
    pub c: Option<String>,
    pub period: Option<String>,
    pub out: Option<PathBuf>,
    pub allow_partial: Option<bool>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct YcFile {
    pub c: Option<String>,
    pub max_period: Option<usize>,
    pub out_prefix: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct XsetFile {
    pub bounds: Option<String>,
    pub res: Option<String>,
    pub max_period: Option<usize>,
    pub escape_iters: Option<u32>,
    pub threads: Option<usize>,
    pub tile_size: Option<usize>,
    pub continuation: Option<bool>,
    pub margin: Option<f64>,
    pub supersample: Option<bool>,
    pub out_prefix: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyFile {
    pub seed: Option<u64>,
    pub only: Option<Vec<String>>,
    pub k: Option<usize>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Usage(format!("bad config {}: {e}", path.display())))
    }
}

/// Echo of a run, written next to its outputs.
#[derive(Debug, Serialize)]
pub struct RunManifest<T: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub argv: Vec<String>,
    pub config_file: Option<PathBuf>,
    pub finder: OrbitFinderConfig,
    pub resolved: T,
}

impl<T: Serialize> RunManifest<T> {
    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(self).map_err(|e| CliError::Runtime(e.to_string()))?;
        std::fs::write(path, text + "\n").map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
    }
}

/// Worker count when neither flag nor file sets one.
pub fn default_threads() -> usize {
    std::env::var("MULTATLAS_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n >= 1)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}
