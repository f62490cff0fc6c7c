use std::fs;
use std::path::Path;

use rads_core::corpusgap::KlConfig;
use rads_core::harness::{HarnessConfig, Scenario};
use serde::{Deserialize, Serialize};

use crate::Failure;

pub const DEFAULT_SEED: u64 = 0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusGapConfig {
    pub max_n: usize,
    pub epsilon: f64,
    pub top_k: usize,
}

impl Default for CorpusGapConfig {
    fn default() -> Self {
        CorpusGapConfig {
            max_n: 2,
            epsilon: KlConfig::default().epsilon,
            top_k: 20,
        }
    }
}

/// Optional JSON configuration. Every section falls back to its defaults;
/// command-line flags override file values.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub scenario: Scenario,
    pub harness: HarnessConfig,
    pub corpusgap: CorpusGapConfig,
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, Failure> {
        let Some(path) = path else {
            return Ok(RunConfig::default());
        };
        let text = fs::read_to_string(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
        let de = &mut serde_json::Deserializer::from_str(&text);
        let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let field = e.path().to_string();
            let inner = e.into_inner();
            Failure::usage(format!("{}: {field}: {inner}", path.display()))
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), Failure> {
        self.scenario.validate("scenario")?;
        self.harness.validate("harness")?;
        let cg = &self.corpusgap;
        if !(1..=2).contains(&cg.max_n) {
            return Err(Failure::usage("corpusgap.max_n: must be 1 or 2"));
        }
        if !(cg.epsilon > 0.0 && cg.epsilon.is_finite()) {
            return Err(Failure::usage("corpusgap.epsilon: must be positive"));
        }
        if cg.top_k == 0 {
            return Err(Failure::usage("corpusgap.top_k: must be at least 1"));
        }
        Ok(())
    }

    /// Seed precedence: flag, then `RADS_SEED` (both resolved by clap into
    /// `flag`), then the config file, then the built-in default.
    pub fn seed(&self, flag: Option<u64>) -> u64 {
        flag.or(self.seed).unwrap_or(DEFAULT_SEED)
    }
}
