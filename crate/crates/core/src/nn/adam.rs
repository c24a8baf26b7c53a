//! Adam optimizer with stepwise learning-rate decay.

use ndarray::ArrayD;

use super::math::Real;
use super::{ParamTensor, TrainConfig};
use crate::error::{Error, Result};

/// Learning rate at a given 0-based step index:
/// `lr0 · decay_factor^⌊step/decay_every⌋`.
pub fn effective_lr(cfg: &TrainConfig, step_index: u64) -> f64 {
    cfg.lr0 * cfg.decay_factor.powi((step_index / cfg.decay_every) as i32)
}

struct AdamSlot<R: Real> {
    name: String,
    m: ArrayD<R>,
    v: ArrayD<R>,
}

/// Adam state (first and second moment estimates per parameter).
///
/// Slots are created lazily on the first step and matched positionally by
/// name afterwards, so callers must pass parameters in a stable order.
#[derive(Default)]
pub struct Adam<R: Real> {
    slots: Vec<AdamSlot<R>>,
}

impl<R: Real> Adam<R> {
    pub fn new() -> Self {
        Self { slots: Vec::new() }
    }

    /// Apply one update with the learning rate for `step_index` (0-based).
    ///
    /// Every gradient is scanned first; any non-finite value aborts the
    /// step with [`Error::NonFiniteGradient`] before any parameter or
    /// moment state is touched. Gradients are left in place — callers zero
    /// them before the next accumulation.
    pub fn step(
        &mut self,
        params: &mut [&mut ParamTensor<R>],
        step_index: u64,
        cfg: &TrainConfig,
    ) -> Result<()> {
        for p in params.iter() {
            if p.grad.iter().any(|g| !g.finite()) {
                return Err(Error::NonFiniteGradient {
                    param: p.name.clone(),
                    step: step_index,
                });
            }
        }
        if self.slots.is_empty() {
            for p in params.iter() {
                self.slots.push(AdamSlot {
                    name: p.name.clone(),
                    m: ArrayD::zeros(p.values.raw_dim()),
                    v: ArrayD::zeros(p.values.raw_dim()),
                });
            }
        }
        if self.slots.len() != params.len() {
            return Err(Error::ShapeMismatch {
                context: "optimizer state".to_string(),
                expected: format!("{} parameters", self.slots.len()),
                actual: format!("{}", params.len()),
            });
        }

        let lr = effective_lr(cfg, step_index);
        let t = (step_index + 1) as f64;
        let bias1 = 1.0 - cfg.adam_beta1.powf(t);
        let bias2 = 1.0 - cfg.adam_beta2.powf(t);
        let b1 = R::from_f64(cfg.adam_beta1);
        let b2 = R::from_f64(cfg.adam_beta2);
        let one_minus_b1 = R::from_f64(1.0 - cfg.adam_beta1);
        let one_minus_b2 = R::from_f64(1.0 - cfg.adam_beta2);
        let inv_bias1 = R::from_f64(1.0 / bias1);
        let inv_bias2 = R::from_f64(1.0 / bias2);
        let lr_r = R::from_f64(lr);
        let eps = R::from_f64(cfg.adam_eps);

        for (slot, p) in self.slots.iter_mut().zip(params.iter_mut()) {
            if slot.name != p.name || slot.m.shape() != p.values.shape() {
                return Err(Error::ShapeMismatch {
                    context: "optimizer state".to_string(),
                    expected: format!("{} {:?}", slot.name, slot.m.shape()),
                    actual: format!("{} {:?}", p.name, p.values.shape()),
                });
            }
            let values = p.values.as_slice_mut().expect("params are contiguous");
            let grads = p.grad.as_slice().expect("grads are contiguous");
            let ms = slot.m.as_slice_mut().expect("moments are contiguous");
            let vs = slot.v.as_slice_mut().expect("moments are contiguous");
            for i in 0..values.len() {
                let g = grads[i];
                let m = b1 * ms[i] + one_minus_b1 * g;
                let v = b2 * vs[i] + one_minus_b2 * g * g;
                ms[i] = m;
                vs[i] = v;
                let m_hat = m * inv_bias1;
                let v_hat = v * inv_bias2;
                values[i] -= lr_r * m_hat / (v_hat.sqrt_val() + eps);
            }
        }
        Ok(())
    }
}
