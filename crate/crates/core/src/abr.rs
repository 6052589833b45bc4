//! Controller interface and reference policies.

use std::path::PathBuf;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::media::Representation;
use crate::sac::Actor;
use crate::sim::{Action, LiveSession, Observation, RawFeatures, StepOutcome};

/// Everything a controller may look at when picking the next segment.
#[derive(Debug, Clone, PartialEq)]
pub struct ControllerContext {
    pub observation: Observation,
    pub raw: RawFeatures,
    pub predicted_bw: f64,
    pub ladder: Vec<Representation>,
    pub latency_target: f64,
    /// Recent accepted chunk throughputs, Mbps.
    pub bandwidth_window: Vec<f64>,
    /// Latency at the last few segment completions.
    pub latency_window: Vec<f64>,
}

pub trait Controller: Send {
    fn name(&self) -> String;
    fn decide(&mut self, ctx: &ControllerContext) -> Action;
}

/// Highest rung whose bitrate does not exceed `budget_mbps`, else rung 0.
pub fn highest_rung_within(ladder: &[Representation], budget_mbps: f64) -> usize {
    ladder
        .iter()
        .rposition(|r| r.bitrate_mbps() <= budget_mbps)
        .unwrap_or(0)
}

fn mean_std(xs: &[f64]) -> Option<(f64, f64)> {
    if xs.is_empty() {
        return None;
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    Some((mean, var.sqrt()))
}

/// Always the same rung at 1.0x. Rungs past the top clamp to the top.
#[derive(Debug, Clone, Copy)]
pub struct FixedRung(pub usize);

impl Controller for FixedRung {
    fn name(&self) -> String {
        format!("fixed:{}", self.0)
    }

    fn decide(&mut self, ctx: &ControllerContext) -> Action {
        let l = ctx.ladder.len();
        Action::for_rung(self.0.min(l.saturating_sub(1)), l, 1.0)
    }
}

/// Throughput rule on the predicted bandwidth with simple latency catch-up.
#[derive(Debug, Clone, Copy)]
pub struct ThroughputRule {
    pub safety: f64,
    pub latency_factor: f64,
    pub low_buffer: f64,
}

impl Default for ThroughputRule {
    fn default() -> Self {
        Self {
            safety: 0.9,
            latency_factor: 1.2,
            low_buffer: 0.5,
        }
    }
}

pub fn throughput_rule(ctx: &ControllerContext, rule: &ThroughputRule) -> Action {
    let rung = highest_rung_within(&ctx.ladder, rule.safety * ctx.predicted_bw);
    let speed = if ctx.raw.latency > rule.latency_factor * ctx.latency_target {
        1.1
    } else if ctx.raw.buffer < rule.low_buffer {
        0.9
    } else {
        1.0
    };
    Action::for_rung(rung, ctx.ladder.len(), speed)
}

impl Controller for ThroughputRule {
    fn name(&self) -> String {
        "rule".into()
    }

    fn decide(&mut self, ctx: &ControllerContext) -> Action {
        throughput_rule(ctx, self)
    }
}

/// Conservative mean-minus-deviation heuristic over bandwidth and latency.
#[derive(Debug, Clone, Copy)]
pub struct MeanStdHeuristic {
    pub f: f64,
}

impl Default for MeanStdHeuristic {
    fn default() -> Self {
        Self { f: 1.0 }
    }
}

pub fn mean_std_heuristic(ctx: &ControllerContext, f: f64) -> Action {
    let estimate = match mean_std(&ctx.bandwidth_window) {
        Some((m, s)) => m - f * s,
        None => ctx.predicted_bw,
    };
    let rung = highest_rung_within(&ctx.ladder, estimate);
    let speed = match mean_std(&ctx.latency_window) {
        Some((m, s)) if m + f * s > ctx.latency_target => 1.1,
        _ => 1.0,
    };
    Action::for_rung(rung, ctx.ladder.len(), speed)
}

impl Controller for MeanStdHeuristic {
    fn name(&self) -> String {
        "meanstd".into()
    }

    fn decide(&mut self, ctx: &ControllerContext) -> Action {
        mean_std_heuristic(ctx, self.f)
    }
}

/// Trained policy acting on its deterministic (mean) output.
#[derive(Debug, Clone)]
pub struct SacController {
    actor: Actor,
    label: String,
}

impl SacController {
    pub fn new(actor: Actor, label: impl Into<String>) -> Self {
        Self {
            actor,
            label: label.into(),
        }
    }
}

impl Controller for SacController {
    fn name(&self) -> String {
        self.label.clone()
    }

    fn decide(&mut self, ctx: &ControllerContext) -> Action {
        self.actor.act_deterministic(&ctx.observation)
    }
}

/// Parsed `--abr` value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ControllerSpec {
    Fixed(FixedChoice),
    Rule,
    MeanStd,
    Sac(PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FixedChoice {
    Rung(usize),
    Max,
}

impl FromStr for ControllerSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::validation(format!("unknown controller {s:?}"));
        match s {
            "rule" => return Ok(ControllerSpec::Rule),
            "meanstd" => return Ok(ControllerSpec::MeanStd),
            _ => {}
        }
        if let Some(rest) = s.strip_prefix("fixed:") {
            if rest == "max" {
                return Ok(ControllerSpec::Fixed(FixedChoice::Max));
            }
            return rest
                .parse()
                .map(|r| ControllerSpec::Fixed(FixedChoice::Rung(r)))
                .map_err(|_| bad());
        }
        if let Some(path) = s.strip_prefix("sac:") {
            if path.is_empty() {
                return Err(bad());
            }
            return Ok(ControllerSpec::Sac(PathBuf::from(path)));
        }
        Err(bad())
    }
}

impl std::fmt::Display for ControllerSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ControllerSpec::Fixed(FixedChoice::Rung(r)) => write!(f, "fixed:{r}"),
            ControllerSpec::Fixed(FixedChoice::Max) => write!(f, "fixed:max"),
            ControllerSpec::Rule => f.write_str("rule"),
            ControllerSpec::MeanStd => f.write_str("meanstd"),
            ControllerSpec::Sac(p) => write!(f, "sac:{}", p.display()),
        }
    }
}

impl ControllerSpec {
    /// `ladder_len` resolves `fixed:max`.
    pub fn build(&self, ladder_len: usize) -> Result<Box<dyn Controller>> {
        Ok(match self {
            ControllerSpec::Fixed(FixedChoice::Rung(r)) => Box::new(FixedRung(*r)),
            ControllerSpec::Fixed(FixedChoice::Max) => {
                Box::new(FixedRung(ladder_len.saturating_sub(1)))
            }
            ControllerSpec::Rule => Box::new(ThroughputRule::default()),
            ControllerSpec::MeanStd => Box::new(MeanStdHeuristic::default()),
            ControllerSpec::Sac(path) => {
                let ckpt = crate::sac::Checkpoint::load(path)?;
                Box::new(SacController::new(ckpt.actor()?, self.to_string()))
            }
        })
    }
}

/// Run a full session with `controller` and return its per-segment log.
pub fn run_session(
    session: &mut LiveSession,
    controller: &mut dyn Controller,
) -> Result<Vec<StepOutcome>> {
    session.reset()?;
    while !session.is_done() {
        let ctx = session.context();
        let action = controller.decide(&ctx);
        session.step(action)?;
    }
    Ok(session.log().to_vec())
}
