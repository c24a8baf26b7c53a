//! Unified run configuration.
//!
//! One JSON document drives every pipeline stage. Any field may be
//! omitted (defaults apply), but unknown keys are rejected so typos fail
//! loudly instead of silently running with defaults. The seed is a plain
//! field — never optional — so persisted run metadata always pins it.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::audio::PrepConfig;
use crate::error::{Error, Result};
use crate::features::SpectralConfig;
use crate::model::ArchDims;
use crate::nn::TrainConfig;
use crate::protocol::{DecisionRule, SplitRatios, SupportMode};

/// Filesystem locations a run reads and writes. All optional: commands
/// require the subset they actually use and fail with a clear message
/// when one is missing.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunPaths {
    pub manifest: Option<PathBuf>,
    pub audio_root: Option<PathBuf>,
    pub cache_dir: Option<PathBuf>,
    pub checkpoint: Option<PathBuf>,
    pub report_dir: Option<PathBuf>,
}

/// Everything a full run needs, in one place.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub prep: PrepConfig,
    pub spectral: SpectralConfig,
    pub arch: ArchDims,
    pub train: TrainConfig,
    pub split: SplitRatios,
    pub support_mode: SupportMode,
    pub rule: DecisionRule,
    /// Distance threshold for the threshold decision rule.
    pub threshold: f64,
    pub seed: u64,
    pub paths: RunPaths,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            prep: PrepConfig::default(),
            spectral: SpectralConfig::default(),
            arch: ArchDims::default(),
            train: TrainConfig::default(),
            split: SplitRatios::default(),
            support_mode: SupportMode::default(),
            rule: DecisionRule::default(),
            threshold: 1e-3,
            seed: 7,
            paths: RunPaths::default(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.prep.validate()?;
        self.spectral.validate(&self.prep)?;
        self.arch.validate()?;
        self.train.validate()?;
        self.split.validate()?;
        if !(self.threshold.is_finite() && self.threshold >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "decision threshold must be a non-negative finite number, got {}",
                self.threshold
            )));
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: RunConfig = serde_json::from_str(&text)
            .map_err(|e| Error::json(format!("run config {}", path.display()), e))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json =
            serde_json::to_string_pretty(self).map_err(|e| Error::json("run config", e))?;
        std::fs::write(path, json).map_err(|e| Error::io(path, e))?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_round_trip() {
        let cfg = RunConfig::default();
        cfg.validate().unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.json");
        cfg.save(&path).unwrap();
        let back = RunConfig::load(&path).unwrap();
        assert_eq!(back, cfg);
        // The seed must be pinned in the persisted document.
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.contains("\"seed\": 7"));
    }

    #[test]
    fn partial_documents_fill_in_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.json");
        std::fs::write(&path, r#"{"seed": 99, "threshold": 0.5}"#).unwrap();
        let cfg = RunConfig::load(&path).unwrap();
        assert_eq!(cfg.seed, 99);
        assert_eq!(cfg.threshold, 0.5);
        assert_eq!(cfg.train, crate::nn::TrainConfig::default());
    }

    #[test]
    fn unknown_keys_and_bad_values_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let typo = dir.path().join("typo.json");
        std::fs::write(&typo, r#"{"sed": 3}"#).unwrap();
        assert!(matches!(RunConfig::load(&typo), Err(Error::Json { .. })));

        let bad = dir.path().join("bad.json");
        std::fs::write(&bad, r#"{"threshold": -1.0}"#).unwrap();
        assert!(matches!(RunConfig::load(&bad), Err(Error::InvalidConfig(_))));
    }
}
