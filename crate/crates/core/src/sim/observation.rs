use serde::{Deserialize, Serialize};

use super::action::{MAX_SPEED, MIN_SPEED};

pub const OBS_DIM: usize = 10;

pub const BUFFER_RANGE_S: f64 = 10.0;
pub const LATENCY_RANGE_S: f64 = 30.0;
pub const STALL_RANGE_S: f64 = 4.0;
pub const BANDWIDTH_CAP_MBPS: f64 = 1000.0;
pub const ENERGY_RANGE_J: f64 = 5.0;

/// Un-normalised player and network state at a segment boundary.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RawFeatures {
    pub buffer: f64,
    pub latency: f64,
    pub last_stall: f64,
    pub speed: f64,
    pub bitrate_kbps: f64,
    pub vmaf: f64,
    pub vmaf_smoothness: f64,
    pub predicted_bw: f64,
    pub data_energy: f64,
    pub playback_energy: f64,
}

/// Normalised state vector fed to learned policies; every entry in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Observation(pub [f64; OBS_DIM]);

impl Observation {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

fn unit(x: f64) -> f64 {
    if x.is_nan() {
        0.0
    } else {
        x.clamp(0.0, 1.0)
    }
}

/// Log-compressed bandwidth in `[0, 1]`.
pub fn normalize_bandwidth(bw: f64) -> f64 {
    let bw = bw.clamp(0.0, BANDWIDTH_CAP_MBPS);
    (1.0 + bw).log10() / (1.0 + BANDWIDTH_CAP_MBPS).log10()
}

/// Fixed-range min-max scaling; bitrate is scaled within the active ladder.
pub fn normalize(raw: &RawFeatures, ladder_min_kbps: f64, ladder_max_kbps: f64) -> Observation {
    let bitrate = if ladder_max_kbps > ladder_min_kbps {
        (raw.bitrate_kbps - ladder_min_kbps) / (ladder_max_kbps - ladder_min_kbps)
    } else {
        0.0
    };
    Observation([
        unit(raw.buffer / BUFFER_RANGE_S),
        unit(raw.latency / LATENCY_RANGE_S),
        unit(raw.last_stall / STALL_RANGE_S),
        unit((raw.speed - MIN_SPEED) / (MAX_SPEED - MIN_SPEED)),
        unit(bitrate),
        unit(raw.vmaf / 100.0),
        unit(raw.vmaf_smoothness / 100.0),
        unit(normalize_bandwidth(raw.predicted_bw)),
        unit(raw.data_energy / ENERGY_RANGE_J),
        unit(raw.playback_energy / ENERGY_RANGE_J),
    ])
}
