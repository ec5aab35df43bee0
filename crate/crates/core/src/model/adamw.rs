//! AdamW with decoupled weight decay.
//!
//! ```text
//! w <- w - lr * wd * w                    (decaying tensors only)
//! m <- b1 * m + (1 - b1) * g
//! v <- b2 * v + (1 - b2) * g^2
//! w <- w - lr * m_hat / (sqrt(v_hat) + eps)
//! ```
//!
//! with bias-corrected `m_hat = m / (1 - b1^t)` and `v_hat = v / (1 - b2^t)`.
//! Norm scales and biases are never decayed.

use super::linalg::Scalar;
use super::params::{Gradients, ModelParams};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamWConfig {
    pub lr: f64,
    pub weight_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamWConfig {
    fn default() -> Self {
        AdamWConfig {
            lr: 1e-3,
            weight_decay: 0.1,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Moment estimates shaped like the parameters, plus the step counter.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState<T> {
    pub hyper: AdamWConfig,
    pub step: u64,
    pub m: Vec<Vec<T>>,
    pub v: Vec<Vec<T>>,
}

impl<T: Scalar> OptimizerState<T> {
    pub fn new(params: &ModelParams<T>, hyper: AdamWConfig) -> Self {
        let zeros: Vec<Vec<T>> = params.tensors().iter().map(|t| vec![T::zero(); t.len()]).collect();
        OptimizerState {
            hyper,
            step: 0,
            m: zeros.clone(),
            v: zeros,
        }
    }
}

/// One AdamW update of a single tensor. `step` is the 1-based step number.
#[allow(clippy::too_many_arguments)]
pub fn adamw_update<T: Scalar>(
    w: &mut [T],
    g: &[T],
    m: &mut [T],
    v: &mut [T],
    step: u64,
    hyper: &AdamWConfig,
    decay: bool,
) {
    let lr = T::from_f64(hyper.lr);
    let b1 = T::from_f64(hyper.beta1);
    let b2 = T::from_f64(hyper.beta2);
    let eps = T::from_f64(hyper.eps);
    let decay_factor = T::from_f64(if decay { 1.0 - hyper.lr * hyper.weight_decay } else { 1.0 });
    let bc1 = T::from_f64(1.0 - hyper.beta1.powf(step as f64));
    let bc2 = T::from_f64(1.0 - hyper.beta2.powf(step as f64));
    for i in 0..w.len() {
        let gi = g[i];
        m[i] = b1 * m[i] + (T::one() - b1) * gi;
        v[i] = b2 * v[i] + (T::one() - b2) * gi * gi;
        let m_hat = m[i] / bc1;
        let v_hat = v[i] / bc2;
        w[i] = w[i] * decay_factor - lr * m_hat / (v_hat.sqrt() + eps);
    }
}

/// Applies one optimizer step to every tensor.
pub fn adamw_step<T: Scalar>(
    params: &mut ModelParams<T>,
    grads: &Gradients<T>,
    state: &mut OptimizerState<T>,
) -> Result<()> {
    let shapes_match = |a: &[Vec<T>], b: &[Vec<T>]| {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.len() == y.len())
    };
    if params.config() != grads.config()
        || !shapes_match(params.tensors(), grads.tensors())
        || !shapes_match(params.tensors(), &state.m)
        || !shapes_match(params.tensors(), &state.v)
    {
        return Err(Error::invalid("parameter, gradient and optimizer shapes differ"));
    }
    state.step += 1;
    let specs = params.config().tensor_specs();
    let hyper = state.hyper;
    for (i, spec) in specs.iter().enumerate() {
        adamw_update(
            &mut params.tensors_mut()[i],
            grads.tensor(i),
            &mut state.m[i],
            &mut state.v[i],
            state.step,
            &hyper,
            spec.decays(),
        );
    }
    Ok(())
}
