use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Deserialize;

use crate::args::{MethodArg, ModeArg, NormalizeArg};

pub const DEFAULT_PATH: &str = "idealflow.toml";

/// Defaults read from a config file. Flags take precedence.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct Config {
    pub method: Option<MethodArg>,
    pub normalize: Option<NormalizeArg>,
    pub kappa: Option<f64>,
    pub agents: Option<usize>,
    pub steps: Option<usize>,
    pub seed: Option<u64>,
    pub checkpoints: Option<usize>,
    pub burn_in: Option<usize>,
    pub mode: Option<ModeArg>,
    pub host: Option<String>,
    pub port: Option<u16>,
    pub cors_origin: Option<Vec<String>>,
    pub journal: Option<PathBuf>,
}

impl Config {
    /// An explicit path must exist; the default one is optional.
    pub fn load(explicit: Option<&Path>) -> Result<Config> {
        let path = match explicit {
            Some(p) => p.to_path_buf(),
            None if Path::new(DEFAULT_PATH).exists() => PathBuf::from(DEFAULT_PATH),
            None => return Ok(Config::default()),
        };
        let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }
}
