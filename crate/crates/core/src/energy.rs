//! Per-segment energy: data acquisition over the radio plus local playback.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::media::Representation;

/// Coefficients of the throughput-based download energy model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnergyCoefficients {
    /// Joule * Mbps, scales the inverse-throughput term.
    pub alpha_net: f64,
    /// Joules per megabit.
    pub beta_net: f64,
}

impl Default for EnergyCoefficients {
    fn default() -> Self {
        Self {
            alpha_net: 1.0,
            beta_net: 0.1,
        }
    }
}

/// Linear playback-power surrogate, all terms in joules per second.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlaybackCoefficients {
    pub c0: f64,
    /// Per Mbps of bitrate.
    pub c1: f64,
    /// Per megapixel.
    pub c2: f64,
    /// Per 30 fps.
    pub c3: f64,
}

impl Default for PlaybackCoefficients {
    fn default() -> Self {
        Self {
            c0: 0.8,
            c1: 0.3,
            c2: 0.05,
            c3: 0.1,
        }
    }
}

impl EnergyCoefficients {
    pub fn validate(&self) -> Result<()> {
        if self.alpha_net >= 0.0 && self.beta_net >= 0.0 {
            Ok(())
        } else {
            Err(Error::validation("energy coefficients must be >= 0"))
        }
    }
}

impl PlaybackCoefficients {
    pub fn validate(&self) -> Result<()> {
        if [self.c0, self.c1, self.c2, self.c3].iter().all(|c| *c >= 0.0) {
            Ok(())
        } else {
            Err(Error::validation("playback coefficients must be >= 0"))
        }
    }
}

/// Download energy of a set of chunks given as `(predicted Mbps, megabits)`.
pub fn data_energy(chunks: &[(f64, f64)], coeffs: &EnergyCoefficients) -> Result<f64> {
    chunks.iter().try_fold(0.0, |acc, &(th, size)| {
        if !(th > 0.0) {
            return Err(Error::Numeric(format!("non-positive throughput {th}")));
        }
        Ok(acc + coeffs.alpha_net / th + coeffs.beta_net * size)
    })
}

pub fn playback_energy(rep: &Representation, duration: f64, coeffs: &PlaybackCoefficients) -> f64 {
    duration
        * (coeffs.c0
            + coeffs.c1 * rep.bitrate_mbps()
            + coeffs.c2 * rep.megapixels()
            + coeffs.c3 * rep.fps / 30.0)
}

pub fn segment_energy(data: f64, playback: f64) -> f64 {
    data + playback
}
