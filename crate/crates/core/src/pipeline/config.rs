//! Run configuration, read from a TOML file whose sections mirror the
//! configured types.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::jump_tests::{ReturnMode, DEFAULT_WINDOW};
use crate::mcmc::{ChainConfig, PriorHyper};
use crate::model::{ModelVariant, Params};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct JumpTestSettings {
    /// Rolling window length in days.
    pub window: usize,
    pub alpha: f64,
    pub returns: ReturnMode,
}

impl Default for JumpTestSettings {
    fn default() -> Self {
        JumpTestSettings {
            window: DEFAULT_WINDOW,
            alpha: 0.05,
            returns: ReturnMode::Level,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationSettings {
    /// Days `T` of a simulated series.
    pub days: usize,
    pub seed: u64,
    /// Predictive paths per p-value study.
    pub predictive_paths: usize,
    /// Simulate predictive paths from the retained draws rather than the
    /// posterior mean.
    pub posterior_draws: bool,
    /// Parameters for `simulate`; the SVJJ-S reference set when absent.
    pub params: Option<Params>,
}

impl Default for SimulationSettings {
    fn default() -> Self {
        SimulationSettings {
            days: 1989,
            seed: 1,
            predictive_paths: 1000,
            posterior_draws: false,
            params: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathSettings {
    pub input: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub variant: ModelVariant,
    #[serde(rename = "ChainConfig")]
    pub chain: ChainConfig,
    #[serde(rename = "PriorHyper")]
    pub prior: PriorHyper,
    #[serde(rename = "JumpTest")]
    pub jump_test: JumpTestSettings,
    #[serde(rename = "Simulation")]
    pub simulation: SimulationSettings,
    #[serde(rename = "Paths")]
    pub paths: PathSettings,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            variant: ModelVariant::SvjjS,
            chain: ChainConfig::default(),
            prior: PriorHyper::default(),
            jump_test: JumpTestSettings::default(),
            simulation: SimulationSettings::default(),
            paths: PathSettings::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        RunConfig::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.chain.validate()?;
        self.prior.validate()?;
        let j = &self.jump_test;
        if j.window < 3 {
            return Err(Error::Config(
                "jump-test window must be at least 3 days".into(),
            ));
        }
        if !(j.alpha > 0.0 && j.alpha < 1.0) {
            return Err(Error::Config("jump-test alpha must lie in (0, 1)".into()));
        }
        if self.simulation.days < 2 {
            return Err(Error::Config(
                "simulated series need at least 2 days".into(),
            ));
        }
        if self.simulation.predictive_paths == 0 {
            return Err(Error::Config("need at least one predictive path".into()));
        }
        Ok(())
    }

    /// Apply the `--seed` override to every seeded component.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.chain.seed = seed;
        self.simulation.seed = seed;
        self
    }

    /// SHA-256 of the configuration with the file paths removed, as hex.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.paths = PathSettings::default();
        let text = serde_json::to_string(&c).expect("config serializes");
        hex::encode(Sha256::digest(text.as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_toml() {
        let cfg = RunConfig::default();
        let text = cfg.to_toml().unwrap();
        let back = RunConfig::from_toml(&text).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.hash(), cfg.hash());
    }

    #[test]
    fn partial_file_and_overrides() {
        let cfg = RunConfig::from_toml(
            "variant = \"SVJ_C\"\n[ChainConfig]\niterations = 300\nburn_in = 100\n[PriorHyper.theta]\nmean = 3.0\nvar = 4.0\n",
        )
        .unwrap();
        assert_eq!(cfg.variant, ModelVariant::SvjC);
        assert_eq!(cfg.chain.iterations, 300);
        assert_eq!(cfg.prior.theta.var, 4.0);
        assert_eq!(cfg.chain.thin, 1);
        let h = cfg.hash();
        assert_ne!(cfg.clone().with_seed(9).hash(), h);
        assert!(RunConfig::from_toml("[ChainConfig]\nburn_in = 6000\n").is_err());
        assert!(RunConfig::from_toml("[Nope]\n").is_err());
    }
}
