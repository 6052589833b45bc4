//! Live chunked-delivery session simulator.

mod action;
mod config;
mod log;
mod observation;
mod session;

pub use action::{map_bitrate, map_speed, speed_to_frac, Action, MAX_SPEED, MIN_SPEED};
pub use config::{SessionConfig, SimParams};
pub use log::{
    load_step_log, save_step_log, write_step_log, StepLogHeader, STEP_LOG_SCHEMA,
    STEP_LOG_VERSION,
};
pub use observation::{normalize, normalize_bandwidth, Observation, RawFeatures, OBS_DIM};
pub use session::{LiveSession, PlayerState, SessionEnd, StepOutcome, StepResult};
