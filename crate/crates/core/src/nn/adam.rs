use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Adam optimiser state for one flat parameter vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    step: u64,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl Adam {
    pub fn new(n_params: usize, lr: f64) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
        }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    /// Bias-corrected Adam update. Non-finite gradients abort without
    /// touching the parameters.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(Error::validation(format!(
                "adam expects {} parameters, got params {} grads {}",
                self.m.len(),
                params.len(),
                grads.len()
            )));
        }
        if let Some(i) = grads.iter().position(|g| !g.is_finite()) {
            return Err(Error::Numeric(format!("non-finite gradient at index {i}")));
        }
        self.step += 1;
        let bc1 = 1.0 - self.beta1.powi(self.step as i32);
        let bc2 = 1.0 - self.beta2.powi(self.step as i32);
        for ((p, g), (m, v)) in params
            .iter_mut()
            .zip(grads)
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            let m_hat = *m / bc1;
            let v_hat = *v / bc2;
            *p -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_keeps_params() {
        let mut opt = Adam::new(3, 0.1);
        let mut p = vec![1.0, -2.0, 3.0];
        opt.step(&mut p, &[0.0; 3]).unwrap();
        assert_eq!(p, vec![1.0, -2.0, 3.0]);
    }

    #[test]
    fn first_step_moves_by_lr() {
        let mut opt = Adam::new(2, 3e-4);
        let mut p = vec![0.0, 0.0];
        opt.step(&mut p, &[0.7, -4.0]).unwrap();
        assert!((p[0] + 3e-4).abs() < 1e-9);
        assert!((p[1] - 3e-4).abs() < 1e-9);
    }

    #[test]
    fn quadratic_bowl_converges() {
        let mut opt = Adam::new(1, 0.1);
        let mut w = vec![5.0];
        let mut reached = None;
        for i in 0..200 {
            let g = 2.0 * w[0];
            opt.step(&mut w, &[g]).unwrap();
            if w[0].abs() < 0.5 && reached.is_none() {
                reached = Some(i);
            }
        }
        assert!(reached.is_some(), "w = {}", w[0]);
        assert!(w[0].abs() < 0.5);
    }

    #[test]
    fn rejects_non_finite() {
        let mut opt = Adam::new(2, 0.1);
        let mut p = vec![1.0, 1.0];
        assert!(opt.step(&mut p, &[f64::NAN, 0.0]).is_err());
        assert_eq!(p, vec![1.0, 1.0]);
        assert_eq!(opt.steps(), 0);
        assert!(opt.step(&mut p, &[1.0]).is_err());
    }
}
