//! Environments the trainer can drive.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::media::{NetworkTrace, TraceMix, TracePreset, VideoManifest};
use crate::sim::{Action, LiveSession, Observation, SessionConfig, SimParams, OBS_DIM};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvStep {
    pub observation: Observation,
    pub reward: f64,
    /// The episode is over; no further steps are allowed.
    pub done: bool,
    /// The episode ended on a step budget rather than a terminal state, so
    /// the learner should still bootstrap from `observation`.
    pub truncated: bool,
}

pub trait Environment: Send {
    fn reset(&mut self) -> Result<Observation>;
    fn step(&mut self, action: Action) -> Result<EnvStep>;
}

/// Builds the environment for worker `w`.
pub type EnvFactory<'a> = dyn Fn(usize) -> Result<Box<dyn Environment>> + Sync + 'a;

/// Live session that draws a fresh trace from its pool on every reset.
pub struct StreamingEnv {
    session: LiveSession,
    pool: Vec<Arc<NetworkTrace>>,
    rng: ChaCha8Rng,
}

impl StreamingEnv {
    pub fn new(
        config: SessionConfig,
        params: SimParams,
        manifest: Arc<VideoManifest>,
        pool: Vec<Arc<NetworkTrace>>,
        seed: u64,
    ) -> Result<Self> {
        let first = pool.first().cloned().ok_or(Error::Empty("trace pool"))?;
        Ok(Self {
            session: LiveSession::new(config, params, first, manifest)?,
            pool,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn session(&self) -> &LiveSession {
        &self.session
    }
}

impl Environment for StreamingEnv {
    fn reset(&mut self) -> Result<Observation> {
        let i = self.rng.random_range(0..self.pool.len());
        self.session.set_trace(self.pool[i].clone());
        self.session.reset()
    }

    /// Sessions end on a fixed segment count, which is a truncation.
    fn step(&mut self, action: Action) -> Result<EnvStep> {
        let r = self.session.step(action)?;
        Ok(EnvStep {
            observation: r.observation,
            reward: r.reward,
            done: r.done,
            truncated: r.done,
        })
    }
}

/// One-step task with reward `-(bitrate_frac - target)^2`.
#[derive(Debug, Clone)]
pub struct BanditEnv {
    pub target: f64,
    pub observation: Observation,
}

impl Default for BanditEnv {
    fn default() -> Self {
        Self {
            target: 0.7,
            observation: Observation([0.5; OBS_DIM]),
        }
    }
}

impl Environment for BanditEnv {
    fn reset(&mut self) -> Result<Observation> {
        Ok(self.observation)
    }

    fn step(&mut self, action: Action) -> Result<EnvStep> {
        let d = action.bitrate_frac - self.target;
        Ok(EnvStep {
            observation: self.observation,
            reward: -d * d,
            done: true,
            truncated: false,
        })
    }
}

/// Split the trace families into `workers` pools of neighbouring mean
/// bandwidth, so each worker specialises on a band of network conditions.
/// Each pool holds `per_pool` traces drawn from its families by mix weight.
pub fn build_trace_pools(
    mix: &TraceMix,
    workers: usize,
    per_pool: usize,
    duration: f64,
    seed: u64,
) -> Result<Vec<Vec<Arc<NetworkTrace>>>> {
    if workers == 0 || per_pool == 0 {
        return Err(Error::validation("need at least one worker and one trace per pool"));
    }
    let mut entries: Vec<(TracePreset, f64)> =
        mix.entries().iter().copied().filter(|(_, w)| *w > 0.0).collect();
    entries.sort_by(|a, b| a.0.mean_bw().total_cmp(&b.0.mean_bw()));
    let groups = workers.min(entries.len());
    let mut pools = Vec::with_capacity(workers);
    for w in 0..workers {
        let g = w % groups;
        let lo = g * entries.len() / groups;
        let hi = (g + 1) * entries.len() / groups;
        let sub = TraceMix::new(entries[lo..hi].to_vec())?;
        let pool_seed = seed.wrapping_add(1_000_003 * w as u64);
        let mut rng = ChaCha8Rng::seed_from_u64(pool_seed);
        let traces = sub.generate(&mut rng, per_pool, duration, pool_seed)?;
        pools.push(traces.into_iter().map(Arc::new).collect());
    }
    Ok(pools)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bandit_reward_peaks_at_target() {
        let mut env = BanditEnv::default();
        env.reset().unwrap();
        let s = env.step(Action::new(0.7, 0.0)).unwrap();
        assert_eq!(s.reward, 0.0);
        assert!(s.done && !s.truncated);
        let s = env.step(Action::new(0.2, 0.0)).unwrap();
        assert!((s.reward + 0.25).abs() < 1e-12);
    }

    #[test]
    fn pools_split_by_bandwidth() {
        let pools = build_trace_pools(&TraceMix::training(), 2, 6, 60.0, 1).unwrap();
        assert_eq!(pools.len(), 2);
        let mean = |p: &Vec<Arc<NetworkTrace>>| {
            p.iter().map(|t| t.mean_bandwidth()).sum::<f64>() / p.len() as f64
        };
        assert!(mean(&pools[0]) < mean(&pools[1]));
        assert!(pools.iter().all(|p| p.len() == 6));
    }
}
