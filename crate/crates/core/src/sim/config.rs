use serde::{Deserialize, Serialize};

use crate::energy::{EnergyCoefficients, PlaybackCoefficients};
use crate::error::{Error, Result};
use crate::qoe::RewardWeights;

/// Geometry and player rules of one live session.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SessionConfig {
    pub segment_duration: f64,
    pub chunks_per_segment: usize,
    pub session_segments: usize,
    /// Media seconds buffered before playback first starts.
    pub startup_buffer: f64,
    /// Media seconds buffered before a stall ends.
    pub resume_buffer: f64,
    pub latency_reference: f64,
    /// Replay the trace from the start once it runs out.
    pub wrap: bool,
    pub seed: u64,
}

impl Default for SessionConfig {
    fn default() -> Self {
        Self {
            segment_duration: 1.0,
            chunks_per_segment: 5,
            session_segments: 300,
            startup_buffer: 0.6,
            resume_buffer: 0.4,
            latency_reference: 2.0,
            wrap: true,
            seed: 0,
        }
    }
}

impl SessionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.segment_duration > 0.0) || self.chunks_per_segment == 0 {
            return Err(Error::validation("segment geometry must be positive"));
        }
        if self.session_segments == 0 {
            return Err(Error::validation("session_segments must be >= 1"));
        }
        if !(self.resume_buffer > 0.0 && self.startup_buffer >= self.resume_buffer) {
            return Err(Error::validation(
                "need startup_buffer >= resume_buffer > 0",
            ));
        }
        if !(self.latency_reference > 0.0) {
            return Err(Error::validation("latency_reference must be positive"));
        }
        Ok(())
    }

    pub fn chunk_duration(&self) -> f64 {
        self.segment_duration / self.chunks_per_segment as f64
    }

    pub fn session_length(&self) -> f64 {
        self.segment_duration * self.session_segments as f64
    }
}

/// Energy and reward models evaluated inside the simulator.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct SimParams {
    pub energy: EnergyCoefficients,
    pub playback: PlaybackCoefficients,
    pub reward: RewardWeights,
}

impl SimParams {
    pub fn validate(&self) -> Result<()> {
        self.energy.validate()?;
        self.playback.validate()?;
        self.reward.validate()
    }
}
