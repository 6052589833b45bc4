//! Chunk-level throughput measurement and one-step-ahead bandwidth prediction.
//!
//! Each delivered chunk yields a throughput sample. Samples from chunks that
//! spent a noticeable share of their download waiting for the live encoder are
//! production-limited and are dropped. Accepted samples feed a sliding-window
//! mean, and the window mean drives a recursive-least-squares predictor.

use std::collections::VecDeque;

use crate::error::{Error, Result};

/// Lower bound on any prediction, in Mbps.
pub const PREDICTION_FLOOR_MBPS: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChunkDownload {
    /// Megabits delivered.
    pub size: f64,
    /// Request-to-last-byte time, seconds.
    pub download_time: f64,
    /// Portion of `download_time` spent waiting for the chunk to be produced.
    pub idle_wait: f64,
}

impl ChunkDownload {
    pub fn throughput(&self) -> f64 {
        self.size / self.download_time
    }
}

/// Sliding-window moving-average throughput estimator.
#[derive(Debug, Clone)]
pub struct ThroughputEstimator {
    window: VecDeque<f64>,
    capacity: usize,
    idle_discard_ratio: f64,
}

impl Default for ThroughputEstimator {
    fn default() -> Self {
        Self::new(10, 0.1)
    }
}

impl ThroughputEstimator {
    pub fn new(capacity: usize, idle_discard_ratio: f64) -> Self {
        let capacity = capacity.max(1);
        Self {
            window: VecDeque::with_capacity(capacity),
            capacity,
            idle_discard_ratio,
        }
    }

    /// Returns whether the sample was accepted into the window.
    pub fn record_chunk(&mut self, d: ChunkDownload) -> bool {
        if !(d.size > 0.0 && d.download_time > 0.0 && d.idle_wait >= 0.0) {
            return false;
        }
        if d.idle_wait > self.idle_discard_ratio * d.download_time {
            return false;
        }
        if self.window.len() == self.capacity {
            self.window.pop_front();
        }
        self.window.push_back(d.throughput());
        true
    }

    pub fn measure(&self) -> Result<f64> {
        if self.window.is_empty() {
            return Err(Error::Empty("throughput window"));
        }
        Ok(self.window.iter().sum::<f64>() / self.window.len() as f64)
    }

    pub fn samples(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        self.window.iter().copied()
    }

    pub fn clear(&mut self) {
        self.window.clear();
    }
}

/// Recursive-least-squares adaptive filter over the last `order` measurements.
#[derive(Debug, Clone)]
pub struct RlsFilter {
    order: usize,
    forgetting: f64,
    delta: f64,
    weights: Vec<f64>,
    /// Row-major `order x order` inverse correlation matrix.
    inv_corr: Vec<f64>,
    /// Most recent measurement at the back.
    history: VecDeque<f64>,
    resets: usize,
}

impl Default for RlsFilter {
    fn default() -> Self {
        Self::new(5, 0.999, 0.01)
    }
}

impl RlsFilter {
    /// `inv_corr` starts at `I / delta`; weights start as a persistence
    /// predictor (`[1, 0, ..., 0]`).
    pub fn new(order: usize, forgetting: f64, delta: f64) -> Self {
        let order = order.max(1);
        let mut weights = vec![0.0; order];
        weights[0] = 1.0;
        Self {
            order,
            forgetting,
            delta,
            weights,
            inv_corr: Self::scaled_identity(order, 1.0 / delta),
            history: VecDeque::with_capacity(order),
            resets: 0,
        }
    }

    fn scaled_identity(n: usize, v: f64) -> Vec<f64> {
        let mut m = vec![0.0; n * n];
        for i in 0..n {
            m[i * n + i] = v;
        }
        m
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn forgetting(&self) -> f64 {
        self.forgetting
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn set_weights(&mut self, w: &[f64]) {
        assert_eq!(w.len(), self.order);
        self.weights.copy_from_slice(w);
    }

    pub fn inv_corr(&self) -> &[f64] {
        &self.inv_corr
    }

    pub fn history_len(&self) -> usize {
        self.history.len()
    }

    /// Number of times the inverse correlation matrix was reinitialised.
    pub fn resets(&self) -> usize {
        self.resets
    }

    /// Append a measurement without adapting the weights.
    pub fn push(&mut self, measurement: f64) {
        if self.history.len() == self.order {
            self.history.pop_front();
        }
        self.history.push_back(measurement);
    }

    /// Regressor vector, most recent first, padded with the oldest value.
    pub fn regressor(&self) -> Result<Vec<f64>> {
        let oldest = *self
            .history
            .front()
            .ok_or(Error::Empty("rls history"))?;
        let mut x: Vec<f64> = self.history.iter().rev().copied().collect();
        x.resize(self.order, oldest);
        Ok(x)
    }

    fn raw_prediction(&self, x: &[f64]) -> f64 {
        self.weights.iter().zip(x).map(|(w, v)| w * v).sum()
    }

    pub fn predict(&self) -> Result<f64> {
        let x = self.regressor()?;
        Ok(self.raw_prediction(&x).max(PREDICTION_FLOOR_MBPS))
    }

    /// One RLS recursion against the new measurement `actual`; returns the
    /// a-priori error `actual - w.x`.
    pub fn update(&mut self, actual: f64) -> Result<f64> {
        let x = self.regressor()?;
        let n = self.order;
        let p = &mut self.inv_corr;

        let mut px = vec![0.0; n];
        for i in 0..n {
            px[i] = (0..n).map(|j| p[i * n + j] * x[j]).sum();
        }
        let xpx: f64 = x.iter().zip(&px).map(|(a, b)| a * b).sum();
        let denom = self.forgetting + xpx;
        let gain: Vec<f64> = px.iter().map(|v| v / denom).collect();

        let err = actual - self.weights.iter().zip(&x).map(|(w, v)| w * v).sum::<f64>();
        for (w, k) in self.weights.iter_mut().zip(&gain) {
            *w += k * err;
        }

        // P is symmetric, so x^T P = (P x)^T
        let inv_lambda = 1.0 / self.forgetting;
        for i in 0..n {
            for j in 0..n {
                p[i * n + j] = (p[i * n + j] - gain[i] * px[j]) * inv_lambda;
            }
        }
        for i in 0..n {
            for j in (i + 1)..n {
                let avg = 0.5 * (p[i * n + j] + p[j * n + i]);
                p[i * n + j] = avg;
                p[j * n + i] = avg;
            }
        }
        if !cholesky_ok(p, n) {
            *p = Self::scaled_identity(n, 1.0 / self.delta);
            self.resets += 1;
        }
        self.push(actual);
        Ok(err)
    }
}

fn cholesky_ok(m: &[f64], n: usize) -> bool {
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = m[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if !(s > 0.0) || !s.is_finite() {
                    return false;
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    true
}

/// Estimator plus predictor, one per streaming session.
#[derive(Debug, Clone, Default)]
pub struct BandwidthPredictor {
    pub estimator: ThroughputEstimator,
    pub filter: RlsFilter,
}

impl BandwidthPredictor {
    pub fn new(estimator: ThroughputEstimator, filter: RlsFilter) -> Self {
        Self { estimator, filter }
    }

    /// Feed one chunk; on acceptance the window mean updates the filter.
    pub fn observe(&mut self, d: ChunkDownload) -> Result<bool> {
        if !self.estimator.record_chunk(d) {
            return Ok(false);
        }
        let m = self.estimator.measure()?;
        if self.filter.history_len() == 0 {
            self.filter.push(m);
        } else {
            self.filter.update(m)?;
        }
        Ok(true)
    }

    pub fn predict(&self) -> Result<f64> {
        self.filter.predict()
    }

    pub fn measure(&self) -> Result<f64> {
        self.estimator.measure()
    }
}
