//! Per-step training reward and session-level QoE / energy-efficiency metrics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::StepOutcome;

/// Weights `k1..k7` of the per-segment reward plus the fixed normalisation
/// references of its seven terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RewardWeights {
    pub k: [f64; 7],
    pub vmaf_scale: f64,
    /// Joules per segment mapped to a unit energy term.
    pub energy_ref: f64,
    pub latency_ref: f64,
    /// Latency term saturates at this multiple of `latency_ref`.
    pub latency_cap: f64,
    pub stall_cap: f64,
    pub speed_band: f64,
}

impl Default for RewardWeights {
    fn default() -> Self {
        Self {
            k: [2.0, 0.5, 0.5, 1.0, 0.3, 0.2, 1.0],
            vmaf_scale: 100.0,
            energy_ref: 2.0,
            latency_ref: 2.0,
            latency_cap: 5.0,
            stall_cap: 4.0,
            speed_band: 0.1,
        }
    }
}

impl RewardWeights {
    pub fn validate(&self) -> Result<()> {
        if self.k.iter().any(|k| !(*k >= 0.0)) {
            return Err(Error::validation("reward weights must be >= 0"));
        }
        let refs = [
            self.vmaf_scale,
            self.energy_ref,
            self.latency_ref,
            self.latency_cap,
            self.stall_cap,
            self.speed_band,
        ];
        if refs.iter().any(|r| !(*r > 0.0)) {
            return Err(Error::validation("reward references must be > 0"));
        }
        Ok(())
    }

    /// Weights whose per-segment penalties match the session QoE
    /// coefficients `c` at the scale set by `k1`, for sessions of
    /// `session_segments` segments. `k1` and the energy weight `k2` are kept.
    pub fn qoe_aligned(&self, c: &QoECoefficients, session_segments: usize) -> Self {
        // QoE per segment carries alpha * vmaf / 20; the reward carries k1 * vmaf / vmaf_scale
        let scale = (self.k[0] / self.vmaf_scale) / (c.alpha / 20.0);
        let t = session_segments.max(1) as f64;
        let mut out = *self;
        out.k[2] = scale * c.gamma;
        out.k[3] = scale * c.beta * self.stall_cap;
        out.k[4] = scale * c.sigma / t * self.latency_ref * self.latency_cap;
        out.k[5] = scale * c.mu * self.speed_band;
        out.k[6] = scale * c.omega / 20.0 * self.vmaf_scale;
        out
    }

    /// The normalised terms `g1..g7` for one outcome.
    pub fn terms(&self, o: &StepOutcome) -> [f64; 7] {
        [
            o.vmaf / self.vmaf_scale,
            (o.data_energy + o.playback_energy) / self.energy_ref,
            if o.stall_event { 1.0 } else { 0.0 },
            o.stall_duration.min(self.stall_cap) / self.stall_cap,
            (o.latency / self.latency_ref).min(self.latency_cap) / self.latency_cap,
            (1.0 - o.speed).abs() / self.speed_band,
            (o.vmaf - o.vmaf_prev).abs() / self.vmaf_scale,
        ]
    }
}

pub fn step_reward(o: &StepOutcome, w: &RewardWeights) -> f64 {
    let g = w.terms(o);
    let k = &w.k;
    k[0] * g[0] / (1.0 + k[1] * g[1])
        - k[2] * g[2]
        - k[3] * g[3]
        - k[4] * g[4]
        - k[5] * g[5]
        - k[6] * g[6]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QoECoefficients {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub sigma: f64,
    pub mu: f64,
    pub omega: f64,
}

impl Default for QoECoefficients {
    fn default() -> Self {
        Self {
            alpha: 0.077,
            beta: 1.249,
            gamma: 2.897,
            sigma: 1.249,
            mu: 0.771,
            omega: 1.436,
        }
    }
}

/// Session QoE: quality level (VMAF / 20) minus stall time, stall count,
/// mean latency, speed deviation and quality switches.
pub fn session_qoe(outcomes: &[StepOutcome], c: &QoECoefficients) -> Result<f64> {
    if outcomes.is_empty() {
        return Err(Error::Empty("session outcomes"));
    }
    let n = outcomes.len() as f64;
    let quality: f64 = outcomes.iter().map(|o| o.vmaf / 20.0).sum();
    let stall_time: f64 = outcomes.iter().map(|o| o.stall_duration).sum();
    let stall_events = outcomes.iter().filter(|o| o.stall_event).count() as f64;
    let mean_latency = outcomes.iter().map(|o| o.latency).sum::<f64>() / n;
    let speed_dev: f64 = outcomes.iter().map(|o| (1.0 - o.speed).abs()).sum();
    let switches: f64 = outcomes
        .windows(2)
        .map(|w| (w[1].vmaf - w[0].vmaf).abs() / 20.0)
        .sum();
    Ok(c.alpha * quality
        - c.beta * stall_time
        - c.gamma * stall_events
        - c.sigma * mean_latency
        - c.mu * speed_dev
        - c.omega * switches)
}

/// QoE per unit of normalised energy.
pub fn energy_efficiency(qoe: f64, total_energy_kj: f64, reference_kj: f64) -> Result<f64> {
    if !(total_energy_kj > 0.0) || !(reference_kj > 0.0) {
        return Err(Error::Numeric(format!(
            "energy must be positive (total {total_energy_kj}, reference {reference_kj})"
        )));
    }
    Ok(qoe / (total_energy_kj / reference_kj))
}

/// Metric columns of the evaluation table, in order.
pub const SUMMARY_COLUMNS: [&str; 10] = [
    "quality_level",
    "quality_smooth",
    "data_dl_mb",
    "bitrate_mbps",
    "latency_s",
    "speed",
    "freezing_s",
    "energy_kj",
    "qoe",
    "energy_efficiency",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SessionSummary {
    pub quality_level: f64,
    pub quality_smooth: f64,
    pub data_dl_mb: f64,
    pub bitrate_mbps: f64,
    pub latency_s: f64,
    pub speed: f64,
    pub freezing_s: f64,
    pub freezing_events: usize,
    pub energy_kj: f64,
    pub qoe: f64,
    pub energy_efficiency: f64,
}

impl SessionSummary {
    /// Values in `SUMMARY_COLUMNS` order.
    pub fn columns(&self) -> [f64; 10] {
        [
            self.quality_level,
            self.quality_smooth,
            self.data_dl_mb,
            self.bitrate_mbps,
            self.latency_s,
            self.speed,
            self.freezing_s,
            self.energy_kj,
            self.qoe,
            self.energy_efficiency,
        ]
    }
}

pub fn summarize(
    outcomes: &[StepOutcome],
    c: &QoECoefficients,
    reference_kj: f64,
) -> Result<SessionSummary> {
    if outcomes.is_empty() {
        return Err(Error::Empty("session outcomes"));
    }
    let n = outcomes.len() as f64;
    let mean = |f: fn(&StepOutcome) -> f64| outcomes.iter().map(f).sum::<f64>() / n;
    let energy_kj = outcomes
        .iter()
        .map(|o| o.data_energy + o.playback_energy)
        .sum::<f64>()
        / 1000.0;
    let qoe = session_qoe(outcomes, c)?;
    Ok(SessionSummary {
        quality_level: mean(|o| o.vmaf / 20.0),
        quality_smooth: outcomes
            .windows(2)
            .map(|w| (w[1].vmaf - w[0].vmaf).abs())
            .sum(),
        data_dl_mb: outcomes.iter().map(|o| o.downloaded_mb).sum(),
        bitrate_mbps: mean(|o| o.bitrate_kbps as f64 / 1000.0),
        latency_s: mean(|o| o.latency),
        speed: mean(|o| o.speed),
        freezing_s: outcomes.iter().map(|o| o.stall_duration).sum(),
        freezing_events: outcomes.iter().filter(|o| o.stall_event).count(),
        energy_kj,
        qoe,
        energy_efficiency: energy_efficiency(qoe, energy_kj, reference_kj)?,
    })
}
