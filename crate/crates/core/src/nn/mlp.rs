use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense network: tanh on hidden layers, identity on the output layer.
///
/// Parameters live in one flat vector, layer by layer, each layer stored as
/// its row-major `out x in` weight matrix followed by its `out` biases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    sizes: Vec<usize>,
    params: Vec<f64>,
}

/// Layer inputs recorded by [`Mlp::forward_cached`] for the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    batch: usize,
    /// `inputs[l]` is the `batch x sizes[l]` input of layer `l`.
    inputs: Vec<Vec<f64>>,
}

/// `c = a * b` for row-major operands given by explicit strides.
#[allow(clippy::too_many_arguments)]
fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    (rsa, csa): (usize, usize),
    b: &[f64],
    (rsb, csb): (usize, usize),
    c: &mut [f64],
) {
    assert!(a.len() >= (m.max(1) - 1) * rsa + (k.max(1) - 1) * csa + 1 || m * k == 0);
    assert!(b.len() >= (k.max(1) - 1) * rsb + (n.max(1) - 1) * csb + 1 || k * n == 0);
    assert!(c.len() >= m * n);
    if m == 0 || n == 0 {
        return;
    }
    // SAFETY: the asserts above keep every strided access inside the slices,
    // and `c` does not alias `a` or `b` (distinct borrows).
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa as isize,
            csa as isize,
            b.as_ptr(),
            rsb as isize,
            csb as isize,
            0.0,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

impl Mlp {
    /// Glorot-uniform weights, zero biases.
    pub fn new<R: Rng + ?Sized>(sizes: &[usize], rng: &mut R) -> Self {
        assert!(sizes.len() >= 2 && sizes.iter().all(|s| *s > 0));
        let mut params = Vec::with_capacity(Self::param_count(sizes));
        for w in sizes.windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            params.extend((0..fan_in * fan_out).map(|_| rng.random_range(-limit..limit)));
            params.extend(std::iter::repeat(0.0).take(fan_out));
        }
        Self {
            sizes: sizes.to_vec(),
            params,
        }
    }

    pub fn from_params(sizes: Vec<usize>, params: Vec<f64>) -> Result<Self> {
        if sizes.len() < 2 || sizes.iter().any(|s| *s == 0) {
            return Err(Error::validation(format!("bad layer sizes {sizes:?}")));
        }
        if params.len() != Self::param_count(&sizes) {
            return Err(Error::validation(format!(
                "expected {} parameters for {sizes:?}, got {}",
                Self::param_count(&sizes),
                params.len()
            )));
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::Numeric("non-finite parameter".into()));
        }
        Ok(Self { sizes, params })
    }

    pub fn param_count(sizes: &[usize]) -> usize {
        sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn input_size(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_size(&self) -> usize {
        self.sizes[self.sizes.len() - 1]
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn check_input(&self, x: &[f64], batch: usize) -> Result<()> {
        if x.len() != batch * self.input_size() {
            return Err(Error::validation(format!(
                "input of length {} does not match batch {batch} x {}",
                x.len(),
                self.input_size()
            )));
        }
        Ok(())
    }

    fn layer_forward(&self, layer: usize, offset: usize, x: &[f64], batch: usize) -> Vec<f64> {
        let (fan_in, fan_out) = (self.sizes[layer], self.sizes[layer + 1]);
        let w = &self.params[offset..offset + fan_in * fan_out];
        let b = &self.params[offset + fan_in * fan_out..offset + fan_in * fan_out + fan_out];
        let mut z = vec![0.0; batch * fan_out];
        // z = x * w^T
        gemm(batch, fan_in, fan_out, x, (fan_in, 1), w, (1, fan_in), &mut z);
        let hidden = layer + 2 < self.sizes.len();
        for row in z.chunks_exact_mut(fan_out) {
            for (v, bias) in row.iter_mut().zip(b) {
                *v += bias;
                if hidden {
                    *v = v.tanh();
                }
            }
        }
        z
    }

    /// Forward a row-major `batch x input` matrix.
    pub fn forward(&self, x: &[f64], batch: usize) -> Result<Vec<f64>> {
        self.check_input(x, batch)?;
        let mut a = x.to_vec();
        let mut offset = 0;
        for l in 0..self.sizes.len() - 1 {
            a = self.layer_forward(l, offset, &a, batch);
            offset += self.sizes[l] * self.sizes[l + 1] + self.sizes[l + 1];
        }
        Ok(a)
    }

    pub fn forward_cached(&self, x: &[f64], batch: usize) -> Result<(Vec<f64>, ForwardCache)> {
        self.check_input(x, batch)?;
        let mut inputs = Vec::with_capacity(self.sizes.len() - 1);
        let mut a = x.to_vec();
        let mut offset = 0;
        for l in 0..self.sizes.len() - 1 {
            let next = self.layer_forward(l, offset, &a, batch);
            inputs.push(a);
            a = next;
            offset += self.sizes[l] * self.sizes[l + 1] + self.sizes[l + 1];
        }
        Ok((a, ForwardCache { batch, inputs }))
    }

    /// Reverse-mode pass for the scalar objective whose gradient w.r.t. the
    /// outputs is `grad_out`. Returns `(parameter gradients, input gradients)`.
    pub fn backward(&self, cache: &ForwardCache, grad_out: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        self.backprop(cache, grad_out, true)
            .map(|(g, dx)| (g.expect("requested"), dx))
    }

    /// Input gradients only; skips the weight-gradient products.
    pub fn input_gradient(&self, cache: &ForwardCache, grad_out: &[f64]) -> Result<Vec<f64>> {
        self.backprop(cache, grad_out, false).map(|(_, dx)| dx)
    }

    fn backprop(
        &self,
        cache: &ForwardCache,
        grad_out: &[f64],
        want_params: bool,
    ) -> Result<(Option<Vec<f64>>, Vec<f64>)> {
        let batch = cache.batch;
        if grad_out.len() != batch * self.output_size() || cache.inputs.len() != self.sizes.len() - 1
        {
            return Err(Error::validation("gradient shape does not match forward pass"));
        }
        let mut grads = want_params.then(|| vec![0.0; self.params.len()]);
        let offsets: Vec<usize> = self
            .sizes
            .windows(2)
            .scan(0, |acc, w| {
                let o = *acc;
                *acc += w[0] * w[1] + w[1];
                Some(o)
            })
            .collect();

        let mut delta = grad_out.to_vec();
        for l in (0..self.sizes.len() - 1).rev() {
            let (fan_in, fan_out) = (self.sizes[l], self.sizes[l + 1]);
            let off = offsets[l];
            let x = &cache.inputs[l];
            if let Some(g) = grads.as_mut() {
                let (gw, rest) = g[off..].split_at_mut(fan_in * fan_out);
                // gw = delta^T * x
                gemm(fan_out, batch, fan_in, &delta, (1, fan_out), x, (fan_in, 1), gw);
                let gb = &mut rest[..fan_out];
                for row in delta.chunks_exact(fan_out) {
                    for (acc, d) in gb.iter_mut().zip(row) {
                        *acc += d;
                    }
                }
            }
            let w = &self.params[off..off + fan_in * fan_out];
            let mut dx = vec![0.0; batch * fan_in];
            // dx = delta * w
            gemm(batch, fan_out, fan_in, &delta, (fan_out, 1), w, (fan_in, 1), &mut dx);
            if l > 0 {
                // x is the tanh output of the previous layer
                for (d, h) in dx.iter_mut().zip(x) {
                    *d *= 1.0 - h * h;
                }
            }
            delta = dx;
        }
        Ok((grads, delta))
    }

    /// `self <- rho * self + (1 - rho) * other`.
    pub fn polyak_from(&mut self, other: &Mlp, rho: f64) {
        assert_eq!(self.sizes, other.sizes);
        for (t, o) in self.params.iter_mut().zip(&other.params) {
            *t = rho * *t + (1.0 - rho) * o;
        }
    }
}
