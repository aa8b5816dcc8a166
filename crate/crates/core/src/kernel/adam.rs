use serde::{Deserialize, Serialize};

use super::{KernelError, ParamSet, Tensor};
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 3e-4,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// First and second moment estimates for every parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<T> {
    pub config: AdamConfig,
    m: Vec<Tensor<T>>,
    v: Vec<Tensor<T>>,
    step: u64,
}

impl<T: Scalar> AdamState<T> {
    pub fn new(config: AdamConfig, params: &ParamSet<T>) -> Self {
        let zeros: Vec<Tensor<T>> = params.shapes().into_iter().map(|(r, c)| Tensor::zeros(r, c)).collect();
        AdamState {
            config,
            m: zeros.clone(),
            v: zeros,
            step: 0,
        }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    /// One bias-corrected Adam update.
    pub fn step(&mut self, params: &mut ParamSet<T>, grads: &[Tensor<T>]) -> Result<(), KernelError> {
        if grads.len() != params.len() || self.m.len() != params.len() {
            return Err(KernelError::ParamCount {
                params: params.len(),
                grads: grads.len(),
            });
        }
        for (i, g) in grads.iter().enumerate() {
            if g.shape() != params.tensor(i).shape() || self.m[i].shape() != g.shape() {
                return Err(KernelError::ShapeMismatch {
                    op: "adam_step",
                    left: params.tensor(i).shape(),
                    right: g.shape(),
                });
            }
        }
        self.step += 1;
        let c = self.config;
        let (b1, b2) = (T::of(c.beta1), T::of(c.beta2));
        let (lr, eps) = (T::of(c.lr), T::of(c.eps));
        let bc1 = T::one() - T::of(c.beta1.powi(self.step as i32));
        let bc2 = T::one() - T::of(c.beta2.powi(self.step as i32));
        for (i, g) in grads.iter().enumerate() {
            let (m, v) = (self.m[i].data_mut(), self.v[i].data_mut());
            let p = params.tensor_mut(i).data_mut();
            for j in 0..g.len() {
                let gj = g.data()[j];
                m[j] = b1 * m[j] + (T::one() - b1) * gj;
                v[j] = b2 * v[j] + (T::one() - b2) * gj * gj;
                let m_hat = m[j] / bc1;
                let v_hat = v[j] / bc2;
                p[j] -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }
}

pub fn adam_step<T: Scalar>(params: &mut ParamSet<T>, grads: &[Tensor<T>], state: &mut AdamState<T>) -> Result<(), KernelError> {
    state.step(params, grads)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_param(values: Vec<f64>) -> ParamSet<f64> {
        let mut p = ParamSet::new();
        p.insert("w", Tensor::column(values));
        p
    }

    #[test]
    fn zero_gradient_leaves_params() {
        let mut p = one_param(vec![0.3, -0.2]);
        let before = p.clone();
        let mut s = AdamState::new(AdamConfig::default(), &p);
        s.step(&mut p, &[Tensor::zeros(2, 1)]).unwrap();
        assert_eq!(p, before);
        assert_eq!(s.steps(), 1);
    }

    #[test]
    fn first_step_by_hand() {
        // m1 = 0.1 g, v1 = 0.001 g^2, m_hat = g, v_hat = g^2
        // update = lr * g / (|g| + eps)
        let g = 0.5;
        let lr = 3e-4;
        let mut p = one_param(vec![1.0]);
        let mut s = AdamState::new(AdamConfig::default(), &p);
        s.step(&mut p, &[Tensor::column(vec![g])]).unwrap();
        let expected = 1.0 - lr * g / (g + 1e-8);
        assert!((p.tensor(0).data()[0] - expected).abs() < 1e-15);
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let mut p = one_param(vec![1.0, 2.0]);
        let mut s = AdamState::new(AdamConfig::default(), &p);
        assert!(s.step(&mut p, &[Tensor::zeros(1, 2)]).is_err());
        assert!(s.step(&mut p, &[]).is_err());
    }
}
