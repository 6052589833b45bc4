//! Squashed-Gaussian actor and twin critics.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::Mlp;
use crate::sim::{Action, Observation, OBS_DIM};

pub const ACTION_DIM: usize = 2;
pub const LOG_STD_MIN: f64 = -5.0;
pub const LOG_STD_MAX: f64 = 2.0;
const HALF_LOG_2PI: f64 = 0.918_938_533_204_672_8;

pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// `ln(1 - tanh(u)^2)` without cancellation for large `|u|`.
pub fn log_one_minus_tanh2(u: f64) -> f64 {
    2.0 * (std::f64::consts::LN_2 - u - softplus(-2.0 * u))
}

/// One action dimension drawn through `a = (tanh(m + sigma * eps) + 1) / 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SquashedSample {
    pub mean: f64,
    pub log_std: f64,
    pub eps: f64,
    pub u: f64,
    pub tanh_u: f64,
    pub action: f64,
    /// Log-density of `action` on `[0, 1]`.
    pub log_prob: f64,
}

impl SquashedSample {
    pub fn new(mean: f64, log_std: f64, eps: f64) -> Self {
        let u = mean + log_std.exp() * eps;
        let tanh_u = u.tanh();
        let log_prob = -0.5 * eps * eps - log_std - HALF_LOG_2PI - log_one_minus_tanh2(u)
            + std::f64::consts::LN_2;
        Self {
            mean,
            log_std,
            eps,
            u,
            tanh_u,
            action: 0.5 * (tanh_u + 1.0),
            log_prob,
        }
    }

    /// `da/du`.
    pub fn squash_slope(&self) -> f64 {
        0.5 * (1.0 - self.tanh_u * self.tanh_u)
    }

    /// Gradients of `alpha * log_prob - q(action)` given `dq/da`, as
    /// `(d/d mean, d/d log_std)` with the noise held fixed.
    pub fn loss_gradients(&self, dq_da: f64, alpha: f64) -> (f64, f64) {
        let sigma = self.log_std.exp();
        let d_u = -dq_da * self.squash_slope() + alpha * 2.0 * self.tanh_u;
        (d_u, d_u * sigma * self.eps - alpha)
    }
}

/// Policy network: observation to per-dimension means and raw log-stds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Actor {
    net: Mlp,
}

/// Per-row result of a batched stochastic forward pass.
#[derive(Debug, Clone)]
pub struct ActorSample {
    pub dims: [SquashedSample; ACTION_DIM],
    /// Whether the raw log-std fell inside the clamp (gradient passes).
    pub log_std_active: [bool; ACTION_DIM],
}

impl ActorSample {
    pub fn action(&self) -> Action {
        Action::new(self.dims[0].action, self.dims[1].action)
    }

    pub fn log_prob(&self) -> f64 {
        self.dims.iter().map(|d| d.log_prob).sum()
    }
}

impl Actor {
    pub fn new<R: Rng + ?Sized>(hidden: &[usize], rng: &mut R) -> Self {
        let mut sizes = vec![OBS_DIM];
        sizes.extend_from_slice(hidden);
        sizes.push(2 * ACTION_DIM);
        Self {
            net: Mlp::new(&sizes, rng),
        }
    }

    pub fn from_network(net: Mlp) -> Result<Self> {
        if net.input_size() != OBS_DIM || net.output_size() != 2 * ACTION_DIM {
            return Err(Error::validation(format!(
                "actor network must map {OBS_DIM} -> {}, got {} -> {}",
                2 * ACTION_DIM,
                net.input_size(),
                net.output_size()
            )));
        }
        Ok(Self { net })
    }

    pub fn network(&self) -> &Mlp {
        &self.net
    }

    pub fn network_mut(&mut self) -> &mut Mlp {
        &mut self.net
    }

    /// Action from the distribution mean: `(tanh(m) + 1) / 2`.
    pub fn act_deterministic(&self, obs: &Observation) -> Action {
        let out = self.net.forward(obs.as_slice(), 1).expect("observation width fixed");
        Action::new(0.5 * (out[0].tanh() + 1.0), 0.5 * (out[1].tanh() + 1.0))
    }

    pub fn sample<R: Rng + ?Sized>(&self, obs: &Observation, rng: &mut R) -> (Action, f64) {
        let eps = draw_noise(1, rng);
        let out = self.net.forward(obs.as_slice(), 1).expect("observation width fixed");
        let s = split_row(&out, &eps);
        (s.action(), s.log_prob())
    }

    /// Reparameterised samples for a flattened `batch x OBS_DIM` input.
    pub fn sample_batch(&self, states: &[f64], eps: &[f64]) -> Result<Vec<ActorSample>> {
        let batch = states.len() / OBS_DIM;
        let out = self.net.forward(states, batch)?;
        Ok(rows(&out, eps))
    }
}

pub fn draw_noise<R: Rng + ?Sized>(batch: usize, rng: &mut R) -> Vec<f64> {
    (0..batch * ACTION_DIM).map(|_| StandardNormal.sample(rng)).collect()
}

pub(crate) fn rows(out: &[f64], eps: &[f64]) -> Vec<ActorSample> {
    out.chunks(2 * ACTION_DIM)
        .zip(eps.chunks(ACTION_DIM))
        .map(|(o, e)| split_row(o, e))
        .collect()
}

fn split_row(out: &[f64], eps: &[f64]) -> ActorSample {
    let mut active = [true; ACTION_DIM];
    let dims: [SquashedSample; ACTION_DIM] = std::array::from_fn(|d| {
        let raw = out[ACTION_DIM + d];
        active[d] = (LOG_STD_MIN..=LOG_STD_MAX).contains(&raw);
        SquashedSample::new(out[d], raw.clamp(LOG_STD_MIN, LOG_STD_MAX), eps[d])
    });
    ActorSample {
        dims,
        log_std_active: active,
    }
}

/// `Q(s, a)` network over the concatenated state and action.
pub fn new_critic<R: Rng + ?Sized>(hidden: &[usize], rng: &mut R) -> Mlp {
    let mut sizes = vec![OBS_DIM + ACTION_DIM];
    sizes.extend_from_slice(hidden);
    sizes.push(1);
    Mlp::new(&sizes, rng)
}

/// Flattened `batch x (OBS_DIM + ACTION_DIM)` critic input.
pub fn critic_input(states: &[f64], actions: &[[f64; ACTION_DIM]]) -> Vec<f64> {
    let mut x = Vec::with_capacity(actions.len() * (OBS_DIM + ACTION_DIM));
    for (s, a) in states.chunks(OBS_DIM).zip(actions) {
        x.extend_from_slice(s);
        x.extend_from_slice(a);
    }
    x
}
