//! Batch evaluation of controllers over trace sets.

use std::sync::Arc;

use rayon::prelude::*;

use crate::abr::{run_session, Controller, ControllerSpec, SacController};
use crate::error::{Error, Result};
use crate::media::{NetworkTrace, VideoManifest};
use crate::qoe::{summarize, QoECoefficients, SessionSummary};
use crate::report::EvalRow;
use crate::sac::{Actor, Checkpoint};
use crate::sim::{LiveSession, SessionConfig, SimParams, StepOutcome};

/// Builds a fresh controller instance for each session.
pub type ControllerFactory = Box<dyn Fn() -> Box<dyn Controller> + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalSetup {
    pub session: SessionConfig,
    pub params: SimParams,
    pub qoe: QoECoefficients,
    pub energy_reference_kj: f64,
}

impl Default for EvalSetup {
    fn default() -> Self {
        Self {
            session: SessionConfig::default(),
            params: SimParams::default(),
            qoe: QoECoefficients::default(),
            energy_reference_kj: 1.0,
        }
    }
}

/// Factory for a parsed spec; checkpoints are read once, up front.
pub fn spec_factory(spec: &ControllerSpec, ladder_len: usize) -> Result<ControllerFactory> {
    if let ControllerSpec::Sac(path) = spec {
        if !path.exists() {
            return Err(Error::validation(format!("checkpoint {} does not exist", path.display())));
        }
        let actor = Checkpoint::load(path)?.actor()?;
        return Ok(actor_factory(actor, spec.to_string()));
    }
    spec.build(ladder_len)?;
    let spec = spec.clone();
    Ok(Box::new(move || spec.build(ladder_len).expect("spec validated")))
}

pub fn actor_factory(actor: Actor, label: String) -> ControllerFactory {
    Box::new(move || Box::new(SacController::new(actor.clone(), label.clone())))
}

pub fn simulate(
    setup: &EvalSetup,
    trace: Arc<NetworkTrace>,
    manifest: Arc<VideoManifest>,
    controller: &mut dyn Controller,
) -> Result<(Vec<StepOutcome>, SessionSummary)> {
    let mut session = LiveSession::new(setup.session, setup.params, trace, manifest)?;
    let outcomes = run_session(&mut session, controller)?;
    let summary = summarize(&outcomes, &setup.qoe, setup.energy_reference_kj)?;
    Ok((outcomes, summary))
}

/// Every (controller, trace) pair, ordered by controller then trace
/// regardless of which sessions finish first. Failed sessions become rows
/// with an error message instead of aborting the batch.
pub fn evaluate(
    setup: &EvalSetup,
    controllers: &[(String, ControllerFactory)],
    traces: &[Arc<NetworkTrace>],
    manifest: &Arc<VideoManifest>,
) -> Vec<EvalRow> {
    let jobs: Vec<(usize, usize)> = (0..controllers.len())
        .flat_map(|c| (0..traces.len()).map(move |t| (c, t)))
        .collect();
    jobs.par_iter()
        .map(|&(c, t)| {
            let (name, factory) = &controllers[c];
            let mut ctl = factory();
            let result = simulate(setup, traces[t].clone(), manifest.clone(), ctl.as_mut());
            EvalRow {
                controller: name.clone(),
                trace: traces[t].label().to_string(),
                summary: result.as_ref().ok().map(|r| r.1),
                error: result.err().map(|e| e.to_string()),
            }
        })
        .collect()
}

/// [`evaluate`] on a dedicated pool of `threads` workers (0 = shared pool).
pub fn evaluate_with_threads(
    setup: &EvalSetup,
    controllers: &[(String, ControllerFactory)],
    traces: &[Arc<NetworkTrace>],
    manifest: &Arc<VideoManifest>,
    threads: usize,
) -> Result<Vec<EvalRow>> {
    if threads == 0 {
        return Ok(evaluate(setup, controllers, traces, manifest));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Worker(e.to_string()))?;
    Ok(pool.install(|| evaluate(setup, controllers, traces, manifest)))
}
