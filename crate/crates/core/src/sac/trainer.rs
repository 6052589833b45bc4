//! Actor/learner training loop over one or more environment workers.

use std::io::Write;
use std::path::Path;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::{mpsc, Arc, Mutex, RwLock};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::agent::{Learner, SacConfig, UpdateStats};
use super::checkpoint::Checkpoint;
use super::env::{EnvFactory, EnvStep, Environment};
use super::per::{PerBuffer, Transition};
use super::policy::Actor;
use crate::error::{Error, Result};
use crate::sim::{Action, Observation};

/// Running mean/variance (Welford) used to standardise rewards.
#[derive(Debug, Clone, Default)]
pub struct RewardStandardizer {
    count: u64,
    mean: f64,
    m2: f64,
}

impl RewardStandardizer {
    pub fn observe(&mut self, r: f64) {
        self.count += 1;
        let d = r - self.mean;
        self.mean += d / self.count as f64;
        self.m2 += d * (r - self.mean);
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn std(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            (self.m2 / self.count as f64).sqrt()
        }
    }

    /// Fold `r` into the statistics, then return it standardised and clipped.
    pub fn normalize(&mut self, r: f64, clip: f64) -> f64 {
        self.observe(r);
        let s = self.std();
        let z = if s > 1e-8 { (r - self.mean) / s } else { 0.0 };
        z.clamp(-clip, clip)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub episode: usize,
    pub worker: usize,
    /// Environment steps taken by all workers when the episode ended.
    pub steps: usize,
    pub length: usize,
    pub total_reward: f64,
    pub mean_reward: f64,
    pub critic_loss: f64,
    pub actor_loss: f64,
    pub entropy: f64,
    pub updates: u64,
}

pub const TRAINING_LOG_COLUMNS: [&str; 10] = [
    "episode",
    "worker",
    "steps",
    "length",
    "total_reward",
    "mean_reward",
    "critic_loss",
    "actor_loss",
    "entropy",
    "updates",
];

pub fn write_training_log<W: Write>(records: &[EpisodeRecord], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{}", TRAINING_LOG_COLUMNS.join(","))?;
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{:.6},{:.6},{:.6},{:.6},{:.6},{}",
            r.episode,
            r.worker,
            r.steps,
            r.length,
            r.total_reward,
            r.mean_reward,
            r.critic_loss,
            r.actor_loss,
            r.entropy,
            r.updates
        )?;
    }
    Ok(())
}

/// Wall-clock and convergence summary of one training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub workers: usize,
    pub threaded: bool,
    pub episodes: usize,
    pub total_steps: usize,
    pub updates: u64,
    pub wall_time_s: f64,
    pub steps_per_s: f64,
    pub reward_threshold: f64,
    pub threshold_window: usize,
    /// First episode count at which the windowed mean reward reached the threshold.
    pub episodes_to_threshold: Option<usize>,
    pub final_window_reward: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub learner: Learner,
    pub log: Vec<EpisodeRecord>,
    pub report: TrainReport,
}

impl TrainOutcome {
    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint::from_learner(&self.learner, self.log.len())
    }
}

pub fn episodes_to_threshold(log: &[EpisodeRecord], threshold: f64, window: usize) -> Option<usize> {
    if window == 0 || log.len() < window {
        return None;
    }
    let mut sum: f64 = log[..window].iter().map(|r| r.mean_reward).sum();
    if sum / window as f64 >= threshold {
        return Some(window);
    }
    for i in window..log.len() {
        sum += log[i].mean_reward - log[i - window].mean_reward;
        if sum / window as f64 >= threshold {
            return Some(i + 1);
        }
    }
    None
}

struct Worker {
    index: usize,
    env: Box<dyn Environment>,
    rng: ChaCha8Rng,
    actor: Arc<Actor>,
    since_sync: usize,
    obs: Option<Observation>,
    total: f64,
    length: usize,
    standardizer: RewardStandardizer,
}

struct Finished {
    worker: usize,
    total: f64,
    length: usize,
}

impl Worker {
    fn new(index: usize, env: Box<dyn Environment>, seed: u64, actor: Arc<Actor>) -> Self {
        Self {
            index,
            env,
            rng: ChaCha8Rng::seed_from_u64(seed.wrapping_add(1 + index as u64)),
            actor,
            since_sync: 0,
            obs: None,
            total: 0.0,
            length: 0,
            standardizer: RewardStandardizer::default(),
        }
    }

    fn step(&mut self, random: bool, cfg: &SacConfig) -> Result<(Transition, Option<Finished>)> {
        let state = match self.obs {
            Some(o) => o,
            None => self.env.reset()?,
        };
        let action = if random {
            Action::new(self.rng.random(), self.rng.random())
        } else {
            self.actor.sample(&state, &mut self.rng).0
        };
        let EnvStep {
            observation: next,
            reward: raw,
            done,
            truncated,
        } = self.env.step(action)?;
        let reward = if cfg.normalize_rewards {
            self.standardizer.normalize(raw, cfg.reward_clip)
        } else {
            raw
        };
        self.total += raw;
        self.length += 1;
        self.since_sync += 1;
        let t = Transition {
            state,
            action,
            reward,
            next_state: next,
            done: done && !truncated,
        };
        if done {
            self.obs = None;
            let f = Finished {
                worker: self.index,
                total: self.total,
                length: self.length,
            };
            self.total = 0.0;
            self.length = 0;
            Ok((t, Some(f)))
        } else {
            self.obs = Some(next);
            Ok((t, None))
        }
    }
}

/// Number of learner updates owed after `steps` environment steps.
fn updates_due(cfg: &SacConfig, steps: usize) -> u64 {
    if steps < cfg.warmup_steps {
        return 0;
    }
    let rounds = steps / cfg.update_every - cfg.warmup_steps / cfg.update_every;
    (rounds * cfg.updates_per_round) as u64
}

fn average(stats: &[UpdateStats]) -> UpdateStats {
    if stats.is_empty() {
        return UpdateStats::default();
    }
    let n = stats.len() as f64;
    UpdateStats {
        critic_loss: stats.iter().map(|s| s.critic_loss).sum::<f64>() / n,
        actor_loss: stats.iter().map(|s| s.actor_loss).sum::<f64>() / n,
        entropy: stats.iter().map(|s| s.entropy).sum::<f64>() / n,
        mean_q: stats.iter().map(|s| s.mean_q).sum::<f64>() / n,
    }
}

struct Recorder<'a> {
    cfg: &'a SacConfig,
    checkpoint: Option<&'a Path>,
    log: Vec<EpisodeRecord>,
}

impl Recorder<'_> {
    fn push(&mut self, f: Finished, steps: usize, stats: UpdateStats, learner: &Learner) -> Result<()> {
        self.log.push(EpisodeRecord {
            episode: self.log.len(),
            worker: f.worker,
            steps,
            length: f.length,
            total_reward: f.total,
            mean_reward: f.total / f.length.max(1) as f64,
            critic_loss: stats.critic_loss,
            actor_loss: stats.actor_loss,
            entropy: stats.entropy,
            updates: learner.updates(),
        });
        let every = self.cfg.checkpoint_every;
        if let Some(path) = self.checkpoint {
            if every > 0 && self.log.len() % every == 0 {
                Checkpoint::from_learner(learner, self.log.len()).save(path)?;
            }
        }
        Ok(())
    }

    fn progress(&self) -> f64 {
        self.log.len() as f64 / self.cfg.episodes as f64
    }
}

fn learn_once(learner: &mut Learner, per: &mut PerBuffer, beta: f64) -> Result<UpdateStats> {
    let sample = per.sample(learner.config.batch_size, beta, &mut learner.rng)?;
    let (stats, td) = learner.learn(&sample)?;
    per.update(&sample.indices, &td);
    Ok(stats)
}

/// Train a fresh learner on environments built by `factory`.
///
/// With one worker, or `threaded = false`, workers are stepped round-robin
/// on the calling thread and the run is reproducible from the seed. Otherwise
/// each worker owns a thread and the learner runs on the calling thread.
pub fn train(config: &SacConfig, factory: &EnvFactory, checkpoint: Option<&Path>) -> Result<TrainOutcome> {
    train_from(Learner::new(config.clone())?, factory, checkpoint)
}

pub fn train_from(learner: Learner, factory: &EnvFactory, checkpoint: Option<&Path>) -> Result<TrainOutcome> {
    let cfg = learner.config.clone();
    cfg.validate()?;
    let start = Instant::now();
    let threaded = cfg.threaded && cfg.workers > 1;
    let (learner, log, steps) = if threaded {
        run_threaded(learner, factory, checkpoint)?
    } else {
        run_interleaved(learner, factory, checkpoint)?
    };
    let wall = start.elapsed().as_secs_f64();
    let window = cfg.threshold_window.min(log.len()).max(1);
    let final_window_reward =
        log[log.len().saturating_sub(window)..].iter().map(|r| r.mean_reward).sum::<f64>() / window as f64;
    let report = TrainReport {
        workers: cfg.workers,
        threaded,
        episodes: log.len(),
        total_steps: steps,
        updates: learner.updates(),
        wall_time_s: wall,
        steps_per_s: steps as f64 / wall.max(1e-9),
        reward_threshold: cfg.reward_threshold,
        threshold_window: cfg.threshold_window,
        episodes_to_threshold: episodes_to_threshold(&log, cfg.reward_threshold, cfg.threshold_window),
        final_window_reward,
    };
    Ok(TrainOutcome { learner, log, report })
}

fn run_interleaved(
    mut learner: Learner,
    factory: &EnvFactory,
    checkpoint: Option<&Path>,
) -> Result<(Learner, Vec<EpisodeRecord>, usize)> {
    let cfg = learner.config.clone();
    // a resumed learner keeps its count; the schedule restarts from it
    let base = learner.updates();
    let mut per = PerBuffer::new(cfg.buffer_capacity, cfg.per_alpha, cfg.per_eps);
    let snapshot = Arc::new(learner.actor.clone());
    let mut workers = (0..cfg.workers)
        .map(|w| Ok(Worker::new(w, factory(w)?, cfg.seed, snapshot.clone())))
        .collect::<Result<Vec<_>>>()?;
    let mut rec = Recorder {
        cfg: &cfg,
        checkpoint,
        log: Vec::new(),
    };
    let mut steps = 0usize;
    let mut stats = UpdateStats::default();
    while rec.log.len() < cfg.episodes {
        for w in workers.iter_mut() {
            if rec.log.len() >= cfg.episodes {
                break;
            }
            let (t, finished) = w.step(steps < cfg.warmup_steps, &cfg)?;
            per.insert(t);
            steps += 1;
            let due = base + updates_due(&cfg, steps);
            if due > learner.updates() && per.len() >= cfg.batch_size {
                let beta = cfg.beta_at(rec.progress());
                let mut round = Vec::new();
                while learner.updates() < due {
                    round.push(learn_once(&mut learner, &mut per, beta)?);
                }
                stats = average(&round);
            }
            if w.since_sync >= cfg.sync_interval {
                w.actor = Arc::new(learner.actor.clone());
                w.since_sync = 0;
            }
            if let Some(f) = finished {
                rec.push(f, steps, stats, &learner)?;
            }
        }
    }
    Ok((learner, rec.log, steps))
}

fn run_threaded(
    mut learner: Learner,
    factory: &EnvFactory,
    checkpoint: Option<&Path>,
) -> Result<(Learner, Vec<EpisodeRecord>, usize)> {
    let cfg = learner.config.clone();
    let base = learner.updates();
    let per = Mutex::new(PerBuffer::new(cfg.buffer_capacity, cfg.per_alpha, cfg.per_eps));
    let snapshot = RwLock::new(Arc::new(learner.actor.clone()));
    let steps = AtomicUsize::new(0);
    let claimed = AtomicUsize::new(0);
    let running = AtomicUsize::new(cfg.workers);
    let stop = AtomicBool::new(false);
    let envs = (0..cfg.workers).map(factory).collect::<Result<Vec<_>>>()?;
    let (tx, rx) = mpsc::channel::<(Finished, usize)>();
    let mut rec = Recorder {
        cfg: &cfg,
        checkpoint,
        log: Vec::new(),
    };

    let worker_result = std::thread::scope(|scope| -> Result<()> {
        let handles: Vec<_> = envs
            .into_iter()
            .enumerate()
            .map(|(w, env)| {
                let tx = tx.clone();
                let (per, snapshot, steps, claimed, running, stop, cfg) =
                    (&per, &snapshot, &steps, &claimed, &running, &stop, &cfg);
                scope.spawn(move || -> Result<()> {
                    let actor = snapshot.read().expect("snapshot lock").clone();
                    let mut worker = Worker::new(w, env, cfg.seed, actor);
                    let result = (|| {
                        while !stop.load(Ordering::Relaxed)
                            && claimed.fetch_add(1, Ordering::SeqCst) < cfg.episodes
                        {
                            loop {
                                let random = steps.load(Ordering::Relaxed) < cfg.warmup_steps;
                                let (t, finished) = worker.step(random, cfg)?;
                                per.lock().expect("replay lock").insert(t);
                                let s = steps.fetch_add(1, Ordering::SeqCst) + 1;
                                if worker.since_sync >= cfg.sync_interval {
                                    worker.actor = snapshot.read().expect("snapshot lock").clone();
                                    worker.since_sync = 0;
                                }
                                if let Some(f) = finished {
                                    let _ = tx.send((f, s));
                                    break;
                                }
                                if stop.load(Ordering::Relaxed) {
                                    break;
                                }
                            }
                        }
                        Ok(())
                    })();
                    if result.is_err() {
                        stop.store(true, Ordering::SeqCst);
                    }
                    running.fetch_sub(1, Ordering::SeqCst);
                    result
                })
            })
            .collect();
        drop(tx);

        let mut stats = UpdateStats::default();
        let mut round = Vec::new();
        let learner_result = (|| -> Result<()> {
            loop {
                while let Ok((f, s)) = rx.try_recv() {
                    rec.push(f, s, stats, &learner)?;
                }
                if running.load(Ordering::SeqCst) == 0 {
                    while let Ok((f, s)) = rx.try_recv() {
                        rec.push(f, s, stats, &learner)?;
                    }
                    return Ok(());
                }
                let due = base + updates_due(&cfg, steps.load(Ordering::SeqCst));
                let ready = per.lock().expect("replay lock").len() >= cfg.batch_size;
                if due > learner.updates() && ready && !stop.load(Ordering::Relaxed) {
                    let beta = cfg.beta_at(rec.progress());
                    let sample = per
                        .lock()
                        .expect("replay lock")
                        .sample(cfg.batch_size, beta, &mut learner.rng)?;
                    let (s, td) = learner.learn(&sample)?;
                    per.lock().expect("replay lock").update(&sample.indices, &td);
                    round.push(s);
                    if round.len() >= cfg.updates_per_round.max(1) {
                        stats = average(&round);
                        round.clear();
                        *snapshot.write().expect("snapshot lock") = Arc::new(learner.actor.clone());
                    }
                } else {
                    std::thread::sleep(Duration::from_micros(200));
                }
            }
        })();
        if learner_result.is_err() {
            stop.store(true, Ordering::SeqCst);
        }
        let mut first_err = learner_result.err();
        for h in handles {
            let r = h
                .join()
                .map_err(|_| Error::Worker("worker thread panicked".into()))
                .and_then(|r| r.map_err(|e| Error::Worker(e.to_string())));
            if let Err(e) = r {
                first_err.get_or_insert(e);
            }
        }
        first_err.map_or(Ok(()), Err)
    });
    worker_result?;
    let total = steps.load(Ordering::SeqCst);
    Ok((learner, rec.log, total))
}
