use serde::{Deserialize, Serialize};

pub const MIN_SPEED: f64 = 0.90;
pub const MAX_SPEED: f64 = 1.10;

/// Continuous two-dimensional control, both components in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Action {
    pub bitrate_frac: f64,
    pub speed_frac: f64,
}

fn unit(x: f64) -> f64 {
    if x.is_nan() {
        0.0
    } else {
        x.clamp(0.0, 1.0)
    }
}

impl Action {
    pub fn new(bitrate_frac: f64, speed_frac: f64) -> Self {
        Self {
            bitrate_frac: unit(bitrate_frac),
            speed_frac: unit(speed_frac),
        }
    }

    pub fn from_slice(a: &[f64]) -> Self {
        Self::new(a[0], a[1])
    }

    pub fn to_array(self) -> [f64; 2] {
        [self.bitrate_frac, self.speed_frac]
    }

    /// Action selecting `rung` of an `ladder_len`-rung ladder at `speed`.
    pub fn for_rung(rung: usize, ladder_len: usize, speed: f64) -> Self {
        let b = if ladder_len <= 1 {
            0.0
        } else {
            rung as f64 / (ladder_len - 1) as f64
        };
        Self::new(b, speed_to_frac(speed))
    }
}

/// Nearest rung to `frac * (L - 1)`, halves rounding up.
pub fn map_bitrate(frac: f64, ladder_len: usize) -> usize {
    if ladder_len <= 1 {
        return 0;
    }
    let top = (ladder_len - 1) as f64;
    // the epsilon absorbs representation error of exact halves like 0.15 * 10
    let rung = (unit(frac) * top + 0.5 + 1e-9).floor() as usize;
    rung.min(ladder_len - 1)
}

pub fn map_speed(frac: f64) -> f64 {
    MIN_SPEED + (MAX_SPEED - MIN_SPEED) * unit(frac)
}

pub fn speed_to_frac(speed: f64) -> f64 {
    unit((speed - MIN_SPEED) / (MAX_SPEED - MIN_SPEED))
}
