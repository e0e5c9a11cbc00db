use std::path::Path;

use anyhow::Result;
use serde::{Deserialize, Serialize};
use tspn::convert::ConversionConfig;
use tspn::eval::DEFAULT_TV_LIMIT;
use tspn::learn::LearnConfig;

use crate::commands::UsageError;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub tv_limit: usize,
    pub non_sample_ratio: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            tv_limit: DEFAULT_TV_LIMIT,
            non_sample_ratio: 1.0,
        }
    }
}

/// Contents of `--config`; every section and field is optional.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub learn: LearnConfig,
    pub convert: ConversionConfig,
    pub eval: EvalConfig,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| UsageError(format!("reading config {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| UsageError(format!("parsing config {}: {e}", path.display())).into())
    }

    /// `--seed` wins over the file's top-level seed, which wins over the
    /// per-section seeds.
    pub fn apply_seed(&mut self, flag: Option<u64>) -> u64 {
        if let Some(seed) = flag.or(self.seed) {
            self.learn.rng_seed = seed;
            self.convert.rng_seed = seed;
            self.seed = Some(seed);
        }
        self.seed.unwrap_or(self.convert.rng_seed)
    }
}

pub fn set<T>(slot: &mut T, flag: Option<T>) {
    if let Some(v) = flag {
        *slot = v;
    }
}
