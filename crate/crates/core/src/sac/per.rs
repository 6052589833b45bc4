//! Proportional prioritized replay.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::sum_tree::SumTree;
use crate::error::{Error, Result};
use crate::sim::{Action, Observation};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub state: Observation,
    pub action: Action,
    pub reward: f64,
    pub next_state: Observation,
    pub done: bool,
}

#[derive(Debug, Clone)]
pub struct PerSample {
    pub transitions: Vec<Transition>,
    pub indices: Vec<usize>,
    /// Importance weights normalised by the batch maximum.
    pub weights: Vec<f64>,
}

/// Ring buffer whose sampling probability is `p_i^alpha / sum_j p_j^alpha`.
#[derive(Debug, Clone)]
pub struct PerBuffer {
    data: Vec<Transition>,
    next: usize,
    tree: SumTree,
    alpha: f64,
    eps: f64,
    max_priority: f64,
}

impl PerBuffer {
    pub fn new(capacity: usize, alpha: f64, eps: f64) -> Self {
        Self {
            data: Vec::with_capacity(capacity.min(1 << 16)),
            next: 0,
            tree: SumTree::new(capacity),
            alpha,
            eps,
            max_priority: 1.0,
        }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.tree.capacity()
    }

    pub fn total_priority(&self) -> f64 {
        self.tree.total()
    }

    /// Stored `p_i^alpha` for slot `i`.
    pub fn scaled_priority(&self, index: usize) -> f64 {
        self.tree.get(index)
    }

    pub fn probability(&self, index: usize) -> f64 {
        self.tree.get(index) / self.tree.total()
    }

    /// New transitions enter with the largest priority seen so far.
    pub fn insert(&mut self, t: Transition) -> usize {
        let slot = self.next;
        if slot == self.data.len() {
            self.data.push(t);
        } else {
            self.data[slot] = t;
        }
        self.tree.set(slot, self.max_priority.powf(self.alpha));
        self.next = (self.next + 1) % self.capacity();
        slot
    }

    /// Set raw priority `p_i` directly (tests and warm starts).
    pub fn set_priority(&mut self, index: usize, priority: f64) {
        assert!(index < self.data.len());
        self.max_priority = self.max_priority.max(priority);
        self.tree.set(index, priority.powf(self.alpha));
    }

    /// Stratified proportional sampling of `n` transitions.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, beta: f64, rng: &mut R) -> Result<PerSample> {
        if self.data.is_empty() {
            return Err(Error::Empty("replay buffer"));
        }
        let total = self.tree.total();
        let segment = total / n as f64;
        let count = self.data.len() as f64;
        let mut indices = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        for k in 0..n {
            let u = (k as f64 + rng.random::<f64>()) * segment;
            let i = self.tree.find(u).min(self.data.len() - 1);
            let p = self.tree.get(i) / total;
            indices.push(i);
            weights.push((count * p).powf(-beta));
        }
        let max_w = weights.iter().cloned().fold(f64::MIN_POSITIVE, f64::max);
        for w in &mut weights {
            *w /= max_w;
        }
        Ok(PerSample {
            transitions: indices.iter().map(|&i| self.data[i]).collect(),
            indices,
            weights,
        })
    }

    /// `p_i = |td_i| + eps`.
    pub fn update(&mut self, indices: &[usize], td_errors: &[f64]) {
        for (&i, td) in indices.iter().zip(td_errors) {
            let p = if td.is_finite() { td.abs() + self.eps } else { self.max_priority };
            self.max_priority = self.max_priority.max(p);
            self.tree.set(i, p.powf(self.alpha));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn t(r: f64) -> Transition {
        Transition {
            state: Observation::default(),
            action: Action::new(0.5, 0.5),
            reward: r,
            next_state: Observation::default(),
            done: false,
        }
    }

    #[test]
    fn empty_sample_fails() {
        let b = PerBuffer::new(4, 0.6, 1e-6);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
        assert!(b.sample(2, 0.4, &mut rng).is_err());
    }

    #[test]
    fn proportional_probabilities() {
        let mut b = PerBuffer::new(4, 1.0, 1e-6);
        b.insert(t(0.0));
        b.insert(t(1.0));
        b.set_priority(0, 1.0);
        b.set_priority(1, 3.0);
        assert!((b.probability(0) - 0.25).abs() < 1e-12);
        assert!((b.probability(1) - 0.75).abs() < 1e-12);
    }

    #[test]
    fn alpha_zero_is_uniform() {
        let mut b = PerBuffer::new(4, 0.0, 1e-6);
        for i in 0..3 {
            b.insert(t(i as f64));
        }
        b.update(&[0, 1, 2], &[0.1, 5.0, 100.0]);
        for i in 0..3 {
            assert!((b.probability(i) - 1.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn insert_uses_max_priority_and_wraps() {
        let mut b = PerBuffer::new(2, 1.0, 0.0);
        b.insert(t(0.0));
        b.update(&[0], &[4.0]);
        assert_eq!(b.insert(t(1.0)), 1);
        assert_eq!(b.scaled_priority(1), 4.0);
        assert_eq!(b.insert(t(2.0)), 0);
        assert_eq!(b.len(), 2);
    }

    #[test]
    fn weights_normalised_by_batch_max() {
        let mut b = PerBuffer::new(8, 0.6, 1e-6);
        for i in 0..8 {
            b.insert(t(i as f64));
        }
        b.update(&(0..8).collect::<Vec<_>>(), &[1.0, 2.0, 3.0, 4.0, 0.5, 0.1, 9.0, 2.0]);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let s = b.sample(16, 0.4, &mut rng).unwrap();
        let max = s.weights.iter().cloned().fold(0.0, f64::max);
        assert!((max - 1.0).abs() < 1e-12);
        assert!(s.weights.iter().all(|w| *w > 0.0 && *w <= 1.0));
        for (i, tr) in s.indices.iter().zip(&s.transitions) {
            assert_eq!(tr.reward, *i as f64);
        }
    }
}
