//! Network trace families with their average bandwidth and mixing weight.

use std::str::FromStr;

use rand::Rng;

use super::trace::{generate_synthetic_trace, round6, NetworkTrace, TraceGenSpec};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TracePreset {
    Hsdpa3g,
    NyuLte,
    Lte4g,
    Lumos5g,
    Synthetic,
}

impl TracePreset {
    pub const ALL: [TracePreset; 5] = [
        TracePreset::Hsdpa3g,
        TracePreset::NyuLte,
        TracePreset::Lte4g,
        TracePreset::Lumos5g,
        TracePreset::Synthetic,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TracePreset::Hsdpa3g => "3g",
            TracePreset::NyuLte => "nyu-lte",
            TracePreset::Lte4g => "4g",
            TracePreset::Lumos5g => "5g",
            TracePreset::Synthetic => "synthetic",
        }
    }

    /// Average bandwidth of the family in Mbps.
    pub fn mean_bw(self) -> f64 {
        match self {
            TracePreset::Hsdpa3g => 0.82,
            TracePreset::NyuLte => 3.86,
            TracePreset::Lte4g => 30.21,
            TracePreset::Lumos5g => 520.66,
            TracePreset::Synthetic => 3.07,
        }
    }

    /// Default share of the trace mix, in percent.
    pub fn mix_weight(self) -> f64 {
        match self {
            TracePreset::Hsdpa3g => 20.0,
            TracePreset::NyuLte => 20.0,
            TracePreset::Lte4g => 10.0,
            TracePreset::Lumos5g => 30.0,
            TracePreset::Synthetic => 20.0,
        }
    }

    /// 3G traces only teach low-bandwidth behaviour and are kept out of evaluation.
    pub fn used_for_testing(self) -> bool {
        self != TracePreset::Hsdpa3g
    }

    pub fn fluctuation(self) -> f64 {
        match self {
            TracePreset::Hsdpa3g => 0.3,
            TracePreset::NyuLte => 0.3,
            TracePreset::Lte4g => 0.25,
            TracePreset::Lumos5g => 0.3,
            TracePreset::Synthetic => 0.5,
        }
    }

    pub fn gen_spec(self, duration: f64, seed: u64) -> TraceGenSpec {
        let mean_bw = self.mean_bw();
        TraceGenSpec {
            mean_bw,
            fluctuation: self.fluctuation(),
            step_period: 1.0,
            // a log-uniform walk on [0.08m, 4m] has stationary mean close to m
            min_bw: round6(0.08 * mean_bw),
            duration,
            seed,
        }
    }

    pub fn generate(self, duration: f64, seed: u64) -> Result<NetworkTrace> {
        Ok(generate_synthetic_trace(&self.gen_spec(duration, seed))?
            .with_label(format!("{}-{seed}", self.name())))
    }
}

impl FromStr for TracePreset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TracePreset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::validation(format!("unknown trace preset {s:?}")))
    }
}

/// Weighted mixture over trace families.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceMix {
    entries: Vec<(TracePreset, f64)>,
}

impl TraceMix {
    pub fn new(entries: Vec<(TracePreset, f64)>) -> Result<Self> {
        if entries.is_empty() || entries.iter().any(|(_, w)| !(*w >= 0.0)) {
            return Err(Error::validation("trace mix needs non-negative weights"));
        }
        if entries.iter().map(|(_, w)| w).sum::<f64>() <= 0.0 {
            return Err(Error::validation("trace mix weights sum to zero"));
        }
        Ok(Self { entries })
    }

    /// Full training mix with the default weights.
    pub fn training() -> Self {
        Self {
            entries: TracePreset::ALL.iter().map(|p| (*p, p.mix_weight())).collect(),
        }
    }

    /// Training mix without the 3G family.
    pub fn testing() -> Self {
        Self {
            entries: TracePreset::ALL
                .iter()
                .filter(|p| p.used_for_testing())
                .map(|p| (*p, p.mix_weight()))
                .collect(),
        }
    }

    pub fn entries(&self) -> &[(TracePreset, f64)] {
        &self.entries
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> TracePreset {
        let total: f64 = self.entries.iter().map(|(_, w)| w).sum();
        let mut u = rng.random::<f64>() * total;
        for (p, w) in &self.entries {
            if u < *w {
                return *p;
            }
            u -= w;
        }
        self.entries[self.entries.len() - 1].0
    }

    /// Draw `count` traces; trace `i` uses seed `seed + i`.
    pub fn generate<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        count: usize,
        duration: f64,
        seed: u64,
    ) -> Result<Vec<NetworkTrace>> {
        (0..count)
            .map(|i| self.sample(rng).generate(duration, seed.wrapping_add(i as u64)))
            .collect()
    }
}
