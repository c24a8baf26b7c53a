//! Hand-rolled neural-network kernels: dense, LSTM, batch norm, dropout,
//! triplet loss, and Adam.
//!
//! Every layer implements its own explicit backward pass (backpropagation
//! through time for the LSTMs) — there is no autodiff anywhere. Kernels are
//! generic over [`Real`] so the full training path can be replayed in f64
//! and compared against central finite differences.
//!
//! Conventions shared by all layers:
//! * batches are row-major: activations are `(batch, features)`, sequences
//!   are `(time, batch, features)`;
//! * `backward` accumulates into each parameter's `.grad` (callers zero
//!   gradients between optimizer steps) and returns the gradient with
//!   respect to the layer input;
//! * all reductions run in a fixed sequential order so results are
//!   bit-reproducible for a given seed.

pub mod adam;
pub mod dense;
pub mod dropout;
pub mod loss;
pub mod lstm;
pub mod math;
pub mod norm;

pub use adam::{effective_lr, Adam};
pub use dense::{Activation, DenseCache, DenseLayer};
pub use dropout::DropoutMask;
pub use loss::{triplet_batch_loss, triplet_loss, TripletBatchGrad};
pub use lstm::{LstmCache, LstmLayer, LstmUpstream};
pub use math::Real;
pub use norm::{BatchNorm, BnCache};

use ndarray::ArrayD;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A trainable tensor: values plus an accumulated gradient of the same
/// shape, tagged with a stable name used by the optimizer state and the
/// checkpoint format.
#[derive(Debug, Clone)]
pub struct ParamTensor<R: Real> {
    pub name: String,
    pub values: ArrayD<R>,
    pub grad: ArrayD<R>,
}

impl<R: Real> ParamTensor<R> {
    /// All-zero parameter (used for biases and for checkpoint loading).
    pub fn zeros(name: &str, shape: &[usize]) -> Self {
        Self {
            name: name.to_string(),
            values: ArrayD::zeros(shape),
            grad: ArrayD::zeros(shape),
        }
    }

    /// Uniform init on `±1/√fan_in`, drawn row-major from `rng` so the
    /// draw order (and therefore the initialized network) is fixed by the
    /// seed alone.
    pub fn uniform(name: &str, shape: &[usize], fan_in: usize, rng: &mut impl Rng) -> Self {
        let bound = 1.0 / (fan_in as f64).sqrt();
        let mut values = ArrayD::zeros(shape);
        for v in values.iter_mut() {
            *v = R::from_f64(rng.random_range(-bound..bound));
        }
        Self {
            name: name.to_string(),
            values,
            grad: ArrayD::zeros(shape),
        }
    }

    /// Reset the accumulated gradient to zero.
    pub fn zero_grad(&mut self) {
        self.grad.fill(R::zero());
    }

    /// Number of scalar values.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    /// True when the tensor holds no values.
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// How triplets are mined from a training batch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum TripletStrategy {
    /// Anchor/positive from one class, negative from the other, all drawn
    /// uniformly.
    Random,
    /// Prefer negatives that violate the margin without being the
    /// degenerate `d_n ≤ d_p` case.
    #[default]
    SemiHard,
}

/// Optimization hyperparameters for triplet training.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    /// Triplet margin α.
    pub margin_alpha: f64,
    /// Balanced samples drawn per step; each anchors one triplet.
    pub batch_size: usize,
    /// Initial Adam learning rate.
    pub lr0: f64,
    /// Steps between learning-rate decays.
    pub decay_every: u64,
    /// Multiplicative decay factor.
    pub decay_factor: f64,
    /// Adam first-moment coefficient.
    pub adam_beta1: f64,
    /// Adam second-moment coefficient.
    pub adam_beta2: f64,
    /// Adam denominator fuzz.
    pub adam_eps: f64,
    /// Dropout probability on the dense head (0 disables).
    pub dropout_p: f64,
    /// Batch-norm running-average momentum:
    /// `running = m·running + (1−m)·batch`.
    pub bn_momentum: f64,
    /// Triplet mining strategy.
    pub strategy: TripletStrategy,
    /// Total optimizer steps to run.
    pub max_steps: u64,
    /// Steps between training-log lines and loss snapshots.
    pub log_every: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            margin_alpha: 0.2,
            batch_size: 64,
            lr0: 0.001,
            decay_every: 5000,
            decay_factor: 0.9,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            dropout_p: 0.2,
            bn_momentum: 0.99,
            strategy: TripletStrategy::SemiHard,
            max_steps: 2000,
            log_every: 100,
        }
    }
}

impl TrainConfig {
    /// Reject values the training loop cannot act on.
    pub fn validate(&self) -> Result<()> {
        if !(self.margin_alpha > 0.0 && self.margin_alpha.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "margin_alpha must be positive and finite, got {}",
                self.margin_alpha
            )));
        }
        if self.batch_size < 2 {
            return Err(Error::InvalidConfig(format!(
                "batch_size must be at least 2 (one sample per class), got {}",
                self.batch_size
            )));
        }
        if !(self.lr0 > 0.0 && self.lr0.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "lr0 must be positive and finite, got {}",
                self.lr0
            )));
        }
        if self.decay_every == 0 {
            return Err(Error::InvalidConfig(
                "decay_every must be nonzero".to_string(),
            ));
        }
        if !(self.decay_factor > 0.0 && self.decay_factor <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "decay_factor must be in (0, 1], got {}",
                self.decay_factor
            )));
        }
        for (name, beta) in [("adam_beta1", self.adam_beta1), ("adam_beta2", self.adam_beta2)] {
            if !(0.0..1.0).contains(&beta) {
                return Err(Error::InvalidConfig(format!(
                    "{name} must be in [0, 1), got {beta}"
                )));
            }
        }
        if !(self.adam_eps > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "adam_eps must be positive, got {}",
                self.adam_eps
            )));
        }
        if !(0.0..1.0).contains(&self.dropout_p) {
            return Err(Error::InvalidConfig(format!(
                "dropout_p must be in [0, 1), got {}",
                self.dropout_p
            )));
        }
        if !(0.0..1.0).contains(&self.bn_momentum) {
            return Err(Error::InvalidConfig(format!(
                "bn_momentum must be in [0, 1), got {}",
                self.bn_momentum
            )));
        }
        if self.max_steps == 0 {
            return Err(Error::InvalidConfig("max_steps must be nonzero".to_string()));
        }
        if self.log_every == 0 {
            return Err(Error::InvalidConfig("log_every must be nonzero".to_string()));
        }
        Ok(())
    }
}
