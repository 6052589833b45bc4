//! Soft actor-critic learner state and update rules.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::per::{PerSample, Transition};
use super::policy::{critic_input, draw_noise, new_critic, rows, Actor, ACTION_DIM};
use crate::error::{Error, Result};
use crate::nn::{Adam, Mlp};
use crate::sim::OBS_DIM;

/// Hyperparameters for the learner and the trainer around it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SacConfig {
    pub hidden: Vec<usize>,
    pub gamma: f64,
    /// Target smoothing coefficient: `target <- polyak * target + (1 - polyak) * online`.
    pub polyak: f64,
    /// Entropy temperature.
    pub alpha: f64,
    pub batch_size: usize,
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub buffer_capacity: usize,
    pub per_alpha: f64,
    pub per_beta_start: f64,
    pub per_beta_end: f64,
    pub per_eps: f64,
    /// Worker steps between actor snapshot refreshes.
    pub sync_interval: usize,
    pub workers: usize,
    /// Run workers on their own threads (ignored for a single worker).
    pub threaded: bool,
    pub episodes: usize,
    /// Environment steps taken with uniform random actions before learning.
    pub warmup_steps: usize,
    /// Environment steps between learner rounds.
    pub update_every: usize,
    pub updates_per_round: usize,
    pub normalize_rewards: bool,
    pub reward_clip: f64,
    /// Episodes between periodic checkpoints (0 disables them).
    pub checkpoint_every: usize,
    /// Windowed mean step reward that counts as "converged" in reports.
    pub reward_threshold: f64,
    pub threshold_window: usize,
    pub seed: u64,
}

impl Default for SacConfig {
    fn default() -> Self {
        Self {
            hidden: vec![128, 128],
            gamma: 0.99,
            polyak: 0.995,
            alpha: 0.2,
            batch_size: 256,
            actor_lr: 3e-4,
            critic_lr: 3e-4,
            buffer_capacity: 1 << 17,
            per_alpha: 0.6,
            per_beta_start: 0.4,
            per_beta_end: 1.0,
            per_eps: 1e-6,
            sync_interval: 200,
            workers: 1,
            threaded: true,
            episodes: 300,
            warmup_steps: 1000,
            update_every: 50,
            updates_per_round: 10,
            normalize_rewards: true,
            reward_clip: 5.0,
            checkpoint_every: 0,
            reward_threshold: 0.0,
            threshold_window: 20,
            seed: 0,
        }
    }
}

impl SacConfig {
    pub fn validate(&self) -> Result<()> {
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        let checks = [
            (!self.hidden.is_empty() && self.hidden.iter().all(|h| *h > 0), "hidden sizes must be positive"),
            (unit(self.gamma), "gamma must lie in [0, 1]"),
            (unit(self.polyak), "polyak must lie in [0, 1]"),
            (self.alpha >= 0.0 && self.alpha.is_finite(), "alpha must be non-negative"),
            (self.batch_size > 0, "batch size must be positive"),
            (self.actor_lr > 0.0 && self.critic_lr > 0.0, "learning rates must be positive"),
            (self.buffer_capacity > 0, "buffer capacity must be positive"),
            (self.per_alpha >= 0.0, "per alpha must be non-negative"),
            (unit(self.per_beta_start) && unit(self.per_beta_end), "per beta must lie in [0, 1]"),
            (self.per_eps > 0.0, "per eps must be positive"),
            (self.sync_interval > 0, "sync interval must be positive"),
            (self.workers > 0, "need at least one worker"),
            (self.episodes > 0, "need at least one episode"),
            (self.update_every > 0, "update cadence must be positive"),
            (self.reward_clip > 0.0, "reward clip must be positive"),
            (self.threshold_window > 0, "threshold window must be positive"),
        ];
        for (ok, msg) in checks {
            if !ok {
                return Err(Error::validation(msg));
            }
        }
        Ok(())
    }

    /// Annealed importance exponent after `progress` (0..1) of training.
    pub fn beta_at(&self, progress: f64) -> f64 {
        let p = progress.clamp(0.0, 1.0);
        self.per_beta_start + (self.per_beta_end - self.per_beta_start) * p
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct UpdateStats {
    pub critic_loss: f64,
    pub actor_loss: f64,
    /// Batch estimate of policy entropy, `-E[log pi]`.
    pub entropy: f64,
    pub mean_q: f64,
}

/// Online and target networks with their optimisers.
#[derive(Debug, Clone)]
pub struct Learner {
    pub config: SacConfig,
    pub actor: Actor,
    pub q1: Mlp,
    pub q2: Mlp,
    pub q1_target: Mlp,
    pub q2_target: Mlp,
    actor_opt: Adam,
    q1_opt: Adam,
    q2_opt: Adam,
    pub rng: ChaCha8Rng,
    updates: u64,
}

fn flatten_states<'a>(it: impl Iterator<Item = &'a crate::sim::Observation>) -> Vec<f64> {
    it.flat_map(|o| o.0).collect()
}

impl Learner {
    pub fn new(config: SacConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let actor = Actor::new(&config.hidden, &mut rng);
        let q1 = new_critic(&config.hidden, &mut rng);
        let q2 = new_critic(&config.hidden, &mut rng);
        Ok(Self::from_parts(config, actor, q1.clone(), q2.clone(), q1, q2, rng, 0))
    }

    #[allow(clippy::too_many_arguments)]
    pub(crate) fn from_parts(
        config: SacConfig,
        actor: Actor,
        q1: Mlp,
        q2: Mlp,
        q1_target: Mlp,
        q2_target: Mlp,
        rng: ChaCha8Rng,
        updates: u64,
    ) -> Self {
        Self {
            actor_opt: Adam::new(actor.network().params().len(), config.actor_lr),
            q1_opt: Adam::new(q1.params().len(), config.critic_lr),
            q2_opt: Adam::new(q2.params().len(), config.critic_lr),
            config,
            actor,
            q1,
            q2,
            q1_target,
            q2_target,
            rng,
            updates,
        }
    }

    pub fn updates(&self) -> u64 {
        self.updates
    }

    /// `y = r + gamma (1 - d) (min_j Qtarg_j(s', a') - alpha log pi(a'|s'))`
    /// with `a'` drawn using the supplied noise.
    pub fn q_targets_with_noise(&self, batch: &[Transition], eps: &[f64]) -> Result<Vec<f64>> {
        let next = flatten_states(batch.iter().map(|t| &t.next_state));
        let samples = self.actor.sample_batch(&next, eps)?;
        let actions: Vec<[f64; ACTION_DIM]> =
            samples.iter().map(|s| [s.dims[0].action, s.dims[1].action]).collect();
        let x = critic_input(&next, &actions);
        let t1 = self.q1_target.forward(&x, batch.len())?;
        let t2 = self.q2_target.forward(&x, batch.len())?;
        Ok(batch
            .iter()
            .zip(&samples)
            .enumerate()
            .map(|(i, (t, s))| {
                let soft = t1[i].min(t2[i]) - self.config.alpha * s.log_prob();
                let cont = if t.done { 0.0 } else { 1.0 };
                t.reward + self.config.gamma * cont * soft
            })
            .collect())
    }

    pub fn q_targets(&mut self, batch: &[Transition]) -> Result<Vec<f64>> {
        let eps = draw_noise(batch.len(), &mut self.rng);
        self.q_targets_with_noise(batch, &eps)
    }

    /// Weighted squared error `(1/B) sum w (Q - y)^2` and its parameter gradient.
    pub fn critic_loss_and_grad(
        critic: &Mlp,
        x: &[f64],
        targets: &[f64],
        weights: &[f64],
    ) -> Result<(f64, Vec<f64>, Vec<f64>)> {
        let b = targets.len();
        let (q, cache) = critic.forward_cached(x, b)?;
        let mut loss = 0.0;
        let grad_out: Vec<f64> = (0..b)
            .map(|i| {
                let err = q[i] - targets[i];
                loss += weights[i] * err * err;
                2.0 * weights[i] * err / b as f64
            })
            .collect();
        let (g, _) = critic.backward(&cache, &grad_out)?;
        Ok((loss / b as f64, g, q))
    }

    /// One gradient step on both critics. Returns the loss and `|y - Q1|`.
    pub fn critic_update(
        &mut self,
        batch: &[Transition],
        targets: &[f64],
        weights: &[f64],
    ) -> Result<(f64, Vec<f64>)> {
        let states = flatten_states(batch.iter().map(|t| &t.state));
        let actions: Vec<[f64; ACTION_DIM]> = batch.iter().map(|t| t.action.to_array()).collect();
        let x = critic_input(&states, &actions);
        let (l1, g1, q1) = Self::critic_loss_and_grad(&self.q1, &x, targets, weights)?;
        let (l2, g2, _) = Self::critic_loss_and_grad(&self.q2, &x, targets, weights)?;
        self.q1_opt.step(self.q1.params_mut(), &g1)?;
        self.q2_opt.step(self.q2.params_mut(), &g2)?;
        let td = q1.iter().zip(targets).map(|(q, y)| (y - q).abs()).collect();
        Ok((0.5 * (l1 + l2), td))
    }

    /// `(1/B) sum [alpha log pi(a|s) - min_j Q_j(s, a)]` for reparameterised
    /// `a`, with its gradient w.r.t. the actor parameters and the batch entropy.
    pub fn actor_loss_and_grad(&self, states: &[f64], eps: &[f64]) -> Result<(f64, Vec<f64>, f64)> {
        let b = states.len() / OBS_DIM;
        let alpha = self.config.alpha;
        let (out, cache) = self.actor.network().forward_cached(states, b)?;
        let samples = rows(&out, eps);
        let actions: Vec<[f64; ACTION_DIM]> =
            samples.iter().map(|s| [s.dims[0].action, s.dims[1].action]).collect();
        let x = critic_input(states, &actions);
        let (qa, ca) = self.q1.forward_cached(&x, b)?;
        let (qb, cb) = self.q2.forward_cached(&x, b)?;
        let pick_a: Vec<f64> = (0..b).map(|i| if qa[i] <= qb[i] { 1.0 } else { 0.0 }).collect();
        let pick_b: Vec<f64> = pick_a.iter().map(|p| 1.0 - p).collect();
        let dxa = self.q1.input_gradient(&ca, &pick_a)?;
        let dxb = self.q2.input_gradient(&cb, &pick_b)?;
        let width = OBS_DIM + ACTION_DIM;
        let mut loss = 0.0;
        let mut entropy = 0.0;
        let mut grad_out = vec![0.0; b * 2 * ACTION_DIM];
        for (i, s) in samples.iter().enumerate() {
            let lp = s.log_prob();
            loss += alpha * lp - qa[i].min(qb[i]);
            entropy -= lp;
            for d in 0..ACTION_DIM {
                let k = i * width + OBS_DIM + d;
                let dq = dxa[k] + dxb[k];
                let (gm, gl) = s.dims[d].loss_gradients(dq, alpha);
                grad_out[i * 2 * ACTION_DIM + d] = gm / b as f64;
                if s.log_std_active[d] {
                    grad_out[i * 2 * ACTION_DIM + ACTION_DIM + d] = gl / b as f64;
                }
            }
        }
        let (g, _) = self.actor.network().backward(&cache, &grad_out)?;
        Ok((loss / b as f64, g, entropy / b as f64))
    }

    pub fn actor_update(&mut self, batch: &[Transition]) -> Result<(f64, f64)> {
        let states = flatten_states(batch.iter().map(|t| &t.state));
        let eps = draw_noise(batch.len(), &mut self.rng);
        let (loss, g, entropy) = self.actor_loss_and_grad(&states, &eps)?;
        self.actor_opt.step(self.actor.network_mut().params_mut(), &g)?;
        Ok((loss, entropy))
    }

    pub fn polyak_update(&mut self) {
        let rho = self.config.polyak;
        self.q1_target.polyak_from(&self.q1, rho);
        self.q2_target.polyak_from(&self.q2, rho);
    }

    /// Full update from a prioritised sample; returns stats and new TD errors.
    pub fn learn(&mut self, sample: &PerSample) -> Result<(UpdateStats, Vec<f64>)> {
        let batch = &sample.transitions;
        let targets = self.q_targets(batch)?;
        let (critic_loss, td) = self.critic_update(batch, &targets, &sample.weights)?;
        let (actor_loss, entropy) = self.actor_update(batch)?;
        self.polyak_update();
        self.updates += 1;
        let mean_q = targets.iter().sum::<f64>() / targets.len() as f64;
        Ok((
            UpdateStats {
                critic_loss,
                actor_loss,
                entropy,
                mean_q,
            },
            td,
        ))
    }
}
