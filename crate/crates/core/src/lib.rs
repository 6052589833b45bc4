//! Energy-aware adaptive bitrate control for low-latency live streaming.
//!
//! The crate bundles a trace and manifest model, bandwidth prediction, a
//! device energy model, a chunk-level live session simulator, baseline
//! controllers and a soft actor-critic learner with prioritised replay, plus
//! batch evaluation, reporting and a command-line front end.

pub mod abr;
pub mod bandwidth;
pub mod cli;
pub mod config;
pub mod energy;
pub mod error;
pub mod evaluation;
pub mod media;
pub mod nn;
pub mod qoe;
pub mod report;
pub mod sac;
pub mod sim;

pub use error::{Error, Result};
