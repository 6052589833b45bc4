//! Run configuration loaded from TOML.
//!
//! Every section is optional; missing keys take their defaults, and the fully
//! resolved configuration is echoed next to each run's outputs.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::energy::{EnergyCoefficients, PlaybackCoefficients};
use crate::error::{Error, Result};
use crate::media::Genre;
use crate::qoe::{QoECoefficients, RewardWeights};
use crate::sac::SacConfig;
use crate::sim::{SessionConfig, SimParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub traces_dir: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub manifest: Option<PathBuf>,
    pub output_dir: PathBuf,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub checkpoint: Option<PathBuf>,
}

impl Default for PathsConfig {
    fn default() -> Self {
        Self {
            traces_dir: None,
            manifest: None,
            output_dir: PathBuf::from("out"),
            checkpoint: None,
        }
    }
}

/// Media used when no trace directory or manifest file is configured.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MediaSetup {
    pub genre: Genre,
    pub traces_per_pool: usize,
    pub trace_duration_s: f64,
}

impl Default for MediaSetup {
    fn default() -> Self {
        Self {
            genre: Genre::Animation,
            traces_per_pool: 60,
            trace_duration_s: 600.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluationSetup {
    /// Energy (kJ) that maps to one unit in the efficiency column.
    pub energy_reference_kj: f64,
    /// Worker threads for batch evaluation; 0 uses every core.
    pub threads: usize,
}

impl Default for EvaluationSetup {
    fn default() -> Self {
        Self {
            energy_reference_kj: 1.0,
            threads: 0,
        }
    }
}

/// How the training reward weights are derived.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RewardPreset {
    /// Use `[reward]` as written.
    #[default]
    Configured,
    /// Replace the penalty weights of `[reward]` by ones matched to `[qoe]`.
    QoeAligned,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    /// Controller used by `simulate` when none is given on the command line.
    pub controller: String,
    pub paths: PathsConfig,
    pub media: MediaSetup,
    pub session: SessionConfig,
    pub reward_preset: RewardPreset,
    pub reward: RewardWeights,
    pub qoe: QoECoefficients,
    pub energy: EnergyCoefficients,
    pub playback: PlaybackCoefficients,
    pub sac: SacConfig,
    pub evaluation: EvaluationSetup,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            controller: "rule".into(),
            paths: PathsConfig::default(),
            media: MediaSetup::default(),
            session: SessionConfig::default(),
            reward_preset: RewardPreset::Configured,
            reward: RewardWeights::default(),
            qoe: QoECoefficients::default(),
            energy: EnergyCoefficients::default(),
            playback: PlaybackCoefficients::default(),
            sac: SacConfig::default(),
            evaluation: EvaluationSetup::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Write the resolved configuration as `config.toml` inside `dir`.
    pub fn echo(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join("config.toml");
        std::fs::write(&path, self.to_toml()?).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }

    /// Reward weights after applying `reward_preset`.
    pub fn effective_reward(&self) -> RewardWeights {
        match self.reward_preset {
            RewardPreset::Configured => self.reward,
            RewardPreset::QoeAligned => self
                .reward
                .qoe_aligned(&self.qoe, self.session.session_segments),
        }
    }

    pub fn sim_params(&self) -> SimParams {
        SimParams {
            energy: self.energy,
            playback: self.playback,
            reward: self.effective_reward(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.session.validate()?;
        self.sim_params().validate()?;
        self.sac.validate()?;
        if !(1..=5).contains(&self.sac.workers) {
            return Err(Error::validation("worker count must lie in 1..=5"));
        }
        let q = &self.qoe;
        if [q.alpha, q.beta, q.gamma, q.sigma, q.mu, q.omega].iter().any(|c| !(*c >= 0.0)) {
            return Err(Error::validation("qoe coefficients must be >= 0"));
        }
        if !(self.evaluation.energy_reference_kj > 0.0) {
            return Err(Error::validation("energy reference must be positive"));
        }
        if self.media.traces_per_pool == 0 || !(self.media.trace_duration_s > 0.0) {
            return Err(Error::validation("media setup needs traces and a positive duration"));
        }
        for (what, p) in [
            ("traces_dir", &self.paths.traces_dir),
            ("manifest", &self.paths.manifest),
        ] {
            if let Some(p) = p {
                if !p.exists() {
                    return Err(Error::validation(format!("{what} {} does not exist", p.display())));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        assert_eq!(RunConfig::from_toml("").unwrap(), RunConfig::default());
    }

    #[test]
    fn echo_round_trips() {
        let mut cfg = RunConfig::default();
        cfg.sac.workers = 3;
        cfg.session.resume_buffer = 0.3;
        let back = RunConfig::from_toml(&cfg.to_toml().unwrap()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn partial_override() {
        let cfg = RunConfig::from_toml("seed = 9\n[sac]\nepisodes = 10\n[media]\ngenre = \"sports\"\n").unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.sac.episodes, 10);
        assert_eq!(cfg.sac.batch_size, 256);
        assert_eq!(cfg.media.genre, Genre::Sports);
    }

    #[test]
    fn aligned_preset_changes_only_penalties() {
        let cfg = RunConfig::from_toml("reward_preset = \"qoe-aligned\"\n").unwrap();
        let w = cfg.sim_params().reward;
        assert_eq!(w.k[..2], RewardWeights::default().k[..2]);
        assert!(w.k[3] > 10.0 * RewardWeights::default().k[3]);
        assert_eq!(RunConfig::default().sim_params().reward, RewardWeights::default());
    }

    #[test]
    fn rejects_unknown_keys_and_bad_ranges() {
        assert!(RunConfig::from_toml("[sac]\nbogus = 1\n").is_err());
        let mut cfg = RunConfig::default();
        cfg.sac.workers = 6;
        assert!(cfg.validate().unwrap_err().is_validation());
        let mut cfg = RunConfig::default();
        cfg.paths.manifest = Some("/definitely/missing.json".into());
        assert!(cfg.validate().is_err());
    }
}
