use std::path::Path;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::agent::{Learner, SacConfig};
use super::policy::Actor;
use crate::error::{Error, Result};
use crate::nn::MlpFile;

pub const CHECKPOINT_FORMAT: &str = "ecoabr.sac-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

/// Networks, configuration and learner RNG state. Optimiser moments are not
/// kept; a learner restored from a checkpoint restarts Adam from zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub config: SacConfig,
    pub episodes: usize,
    pub updates: u64,
    pub actor: MlpFile,
    pub critic1: MlpFile,
    pub critic2: MlpFile,
    pub target1: MlpFile,
    pub target2: MlpFile,
    pub rng: ChaCha8Rng,
}

impl Checkpoint {
    pub fn from_learner(learner: &Learner, episodes: usize) -> Self {
        Self {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            config: learner.config.clone(),
            episodes,
            updates: learner.updates(),
            actor: learner.actor.network().into(),
            critic1: (&learner.q1).into(),
            critic2: (&learner.q2).into(),
            target1: (&learner.q1_target).into(),
            target2: (&learner.q2_target).into(),
            rng: learner.rng.clone(),
        }
    }

    fn check_format(&self) -> Result<()> {
        if self.format != CHECKPOINT_FORMAT || self.version != CHECKPOINT_VERSION {
            return Err(Error::validation(format!(
                "unsupported checkpoint {} v{}",
                self.format, self.version
            )));
        }
        Ok(())
    }

    pub fn actor(&self) -> Result<Actor> {
        self.check_format()?;
        Actor::from_network(self.actor.clone().into_mlp()?)
    }

    pub fn into_learner(self) -> Result<Learner> {
        self.check_format()?;
        self.config.validate()?;
        let actor = self.actor()?;
        Ok(Learner::from_parts(
            self.config,
            actor,
            self.critic1.into_mlp()?,
            self.critic2.into_mlp()?,
            self.target1.into_mlp()?,
            self.target2.into_mlp()?,
            self.rng,
            self.updates,
        ))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let c: Self = serde_json::from_str(text)?;
        c.check_format()?;
        Ok(c)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}
