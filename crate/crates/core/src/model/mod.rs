//! The shared-weight embedding network: feature map in, bounded
//! 128-dimensional vocal embedding out.
//!
//! Pipeline (batch-major everywhere):
//!
//! ```text
//! FeatureMap (48×501) → transpose to (501 steps, 48 dims)
//!   → LSTM-1 (64 units, full sequence)
//!   → LSTM-2 (64 units, last state)
//!   → dense 512 → batch norm → ReLU → dropout
//!   → dense 256 → batch norm → ReLU → dropout
//!   → dense 128 → sigmoid
//! ```
//!
//! The sigmoid head keeps every embedding component in (0, 1), which
//! bounds pairwise distances by √128. One parameter set serves every
//! branch of a triplet — "sharing" weights is simply reusing the same
//! network object.

mod checkpoint;

pub use checkpoint::ModelCheckpoint;

use ndarray::{Array2, Array3, ArrayView1, ArrayView2};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureMap;
use crate::nn::{
    triplet_loss, Activation, BatchNorm, BnCache, DenseCache, DenseLayer, DropoutMask, LstmCache,
    LstmLayer, LstmUpstream, ParamTensor, Real,
};

/// Batch-norm variance fuzz shared by both normalization layers.
pub const BN_EPS: f64 = 1e-5;

/// Layer widths. The defaults are the production architecture; tests use
/// reduced widths to keep finite-difference checks fast.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ArchDims {
    /// Feature rows fed per time step.
    pub input_dim: usize,
    /// Hidden units in the first LSTM.
    pub lstm1: usize,
    /// Hidden units in the second LSTM.
    pub lstm2: usize,
    /// First dense width.
    pub dense1: usize,
    /// Second dense width.
    pub dense2: usize,
    /// Output embedding dimensionality.
    pub embed_dim: usize,
}

impl Default for ArchDims {
    fn default() -> Self {
        Self {
            input_dim: 48,
            lstm1: 64,
            lstm2: 64,
            dense1: 512,
            dense2: 256,
            embed_dim: 128,
        }
    }
}

impl ArchDims {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("input_dim", self.input_dim),
            ("lstm1", self.lstm1),
            ("lstm2", self.lstm2),
            ("dense1", self.dense1),
            ("dense2", self.dense2),
            ("embed_dim", self.embed_dim),
        ] {
            if v == 0 {
                return Err(Error::InvalidConfig(format!(
                    "architecture dimension {name} must be nonzero"
                )));
            }
        }
        Ok(())
    }
}

/// A fixed-length vocal embedding with every component in the open
/// interval (0, 1).
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    values: Vec<f32>,
}

impl Embedding {
    /// Wrap raw sigmoid outputs, clamping into the open interval so
    /// saturated activations cannot round to exactly 0 or 1.
    pub fn from_row<R: Real>(row: ArrayView1<R>) -> Self {
        let upper = 1.0f32.next_down();
        let values = row
            .iter()
            .map(|v| (v.to_f64() as f32).clamp(f32::MIN_POSITIVE, upper))
            .collect();
        Self { values }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.values
    }

    /// Euclidean distance, accumulated in f64.
    pub fn distance(&self, other: &Embedding) -> Result<f64> {
        if self.values.len() != other.values.len() {
            return Err(Error::LengthMismatch {
                context: "embedding distance".to_string(),
                left: self.values.len(),
                right: other.values.len(),
            });
        }
        let mut acc = 0.0f64;
        for (a, b) in self.values.iter().zip(&other.values) {
            let d = f64::from(*a) - f64::from(*b);
            acc += d * d;
        }
        Ok(acc.sqrt())
    }
}

/// Distances and loss from one triplet pass.
#[derive(Debug, Clone, Copy)]
pub struct TripletOutcome {
    pub d_pos: f64,
    pub d_neg: f64,
    pub loss: f64,
}

/// Whether a forward pass uses batch statistics and dropout (training) or
/// running statistics and no dropout (evaluation).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ForwardMode {
    /// Batch-stat normalization plus dropout with the given probability.
    Train { dropout_p: f64, update_running: bool },
    /// Deterministic inference path.
    Eval,
}

/// Per-batch activations retained for the backward pass.
pub struct TrainCache<R: Real> {
    lstm1: LstmCache<R>,
    lstm2: LstmCache<R>,
    fc1: DenseCache<R>,
    bn1: BnCache<R>,
    relu1: Array2<R>,
    drop1: Option<DropoutMask<R>>,
    fc2: DenseCache<R>,
    bn2: BnCache<R>,
    relu2: Array2<R>,
    drop2: Option<DropoutMask<R>>,
    fc3: DenseCache<R>,
}

/// The embedding network. Generic over the scalar so gradient oracles can
/// run the identical code in f64; production uses f32.
#[derive(Debug, Clone)]
pub struct EmbedderNet<R: Real> {
    pub dims: ArchDims,
    pub lstm1: LstmLayer<R>,
    pub lstm2: LstmLayer<R>,
    pub fc1: DenseLayer<R>,
    pub bn1: BatchNorm<R>,
    pub fc2: DenseLayer<R>,
    pub bn2: BatchNorm<R>,
    pub fc3: DenseLayer<R>,
}

impl<R: Real> EmbedderNet<R> {
    /// Seeded initialization: weights uniform on ±1/√fan_in, biases zero
    /// except LSTM forget gates (+1), batch-norm γ = 1 / β = 0.
    pub fn new(dims: ArchDims, bn_momentum: f64, rng: &mut impl Rng) -> Result<Self> {
        dims.validate()?;
        Ok(Self {
            lstm1: LstmLayer::new("lstm1", dims.input_dim, dims.lstm1, rng),
            lstm2: LstmLayer::new("lstm2", dims.lstm1, dims.lstm2, rng),
            fc1: DenseLayer::new("fc1", dims.lstm2, dims.dense1, Activation::Linear, rng),
            bn1: BatchNorm::new("bn1", dims.dense1, bn_momentum, BN_EPS),
            fc2: DenseLayer::new("fc2", dims.dense1, dims.dense2, Activation::Linear, rng),
            bn2: BatchNorm::new("bn2", dims.dense2, bn_momentum, BN_EPS),
            fc3: DenseLayer::new("fc3", dims.dense2, dims.embed_dim, Activation::Sigmoid, rng),
            dims,
        })
    }

    /// All-zero network of the given geometry (checkpoint loading). Note
    /// batch-norm γ still starts at 1 so the layer stays well-defined.
    pub fn zeros(dims: ArchDims, bn_momentum: f64) -> Result<Self> {
        dims.validate()?;
        Ok(Self {
            lstm1: LstmLayer::zeros("lstm1", dims.input_dim, dims.lstm1),
            lstm2: LstmLayer::zeros("lstm2", dims.lstm1, dims.lstm2),
            fc1: DenseLayer::zeros("fc1", dims.lstm2, dims.dense1, Activation::Linear),
            bn1: BatchNorm::new("bn1", dims.dense1, bn_momentum, BN_EPS),
            fc2: DenseLayer::zeros("fc2", dims.dense1, dims.dense2, Activation::Linear),
            bn2: BatchNorm::new("bn2", dims.dense2, bn_momentum, BN_EPS),
            fc3: DenseLayer::zeros("fc3", dims.dense2, dims.embed_dim, Activation::Sigmoid),
            dims,
        })
    }

    /// Trainable parameters in the canonical (checkpoint and optimizer)
    /// order.
    pub fn params_mut(&mut self) -> Vec<&mut ParamTensor<R>> {
        vec![
            &mut self.lstm1.w,
            &mut self.lstm1.u,
            &mut self.lstm1.b,
            &mut self.lstm2.w,
            &mut self.lstm2.u,
            &mut self.lstm2.b,
            &mut self.fc1.w,
            &mut self.fc1.b,
            &mut self.bn1.gamma,
            &mut self.bn1.beta,
            &mut self.fc2.w,
            &mut self.fc2.b,
            &mut self.bn2.gamma,
            &mut self.bn2.beta,
            &mut self.fc3.w,
            &mut self.fc3.b,
        ]
    }

    /// Immutable view of the trainable parameters, same order as
    /// [`Self::params_mut`].
    pub fn params(&self) -> Vec<&ParamTensor<R>> {
        vec![
            &self.lstm1.w,
            &self.lstm1.u,
            &self.lstm1.b,
            &self.lstm2.w,
            &self.lstm2.u,
            &self.lstm2.b,
            &self.fc1.w,
            &self.fc1.b,
            &self.bn1.gamma,
            &self.bn1.beta,
            &self.fc2.w,
            &self.fc2.b,
            &self.bn2.gamma,
            &self.bn2.beta,
            &self.fc3.w,
            &self.fc3.b,
        ]
    }

    /// Zero every parameter gradient.
    pub fn zero_grads(&mut self) {
        for p in self.params_mut() {
            p.zero_grad();
        }
    }

    /// Stack standardized feature maps into the `(time, batch, dims)`
    /// input layout (each 48×501 map contributes one batch column,
    /// transposed to time-major).
    pub fn build_input(&self, maps: &[&FeatureMap]) -> Result<Array3<R>> {
        if maps.is_empty() {
            return Err(Error::EmptyRecords {
                context: "embedding batch".to_string(),
            });
        }
        let rows = self.dims.input_dim;
        let cols = maps[0].values.ncols();
        for m in maps {
            if m.values.nrows() != rows || m.values.ncols() != cols {
                return Err(Error::ShapeMismatch {
                    context: format!("feature map {}", m.utt_id),
                    expected: format!("({rows}, {cols})"),
                    actual: format!("({}, {})", m.values.nrows(), m.values.ncols()),
                });
            }
        }
        Ok(Array3::from_shape_fn(
            (cols, maps.len(), rows),
            |(t, b, d)| R::from_f64(f64::from(maps[b].values[[d, t]])),
        ))
    }

    /// Training forward over a prepared `(T, B, input_dim)` batch.
    /// Returns the raw sigmoid outputs `(B, embed_dim)` plus the cache the
    /// backward pass consumes. Requires `B ≥ 2` (batch-norm statistics).
    pub fn forward_train(
        &mut self,
        x: Array3<R>,
        dropout_p: f64,
        update_running: bool,
        rng: &mut impl Rng,
    ) -> Result<(Array2<R>, TrainCache<R>)> {
        let lstm1 = self.lstm1.forward_batch(x)?;
        let h1 = lstm1.seq_output().to_owned();
        let lstm2 = self.lstm2.forward_batch(h1)?;
        let last = lstm2.last_output().to_owned();

        let (y1, fc1) = self.fc1.forward(last.view())?;
        let (y1, bn1) = self.bn1.forward_train(y1.view(), update_running)?;
        let mut a1 = y1;
        a1.mapv_inplace(|v| v.max_val(R::zero()));
        let relu1 = a1.clone();
        let drop1 = if dropout_p > 0.0 {
            let mask = DropoutMask::sample(a1.nrows(), a1.ncols(), dropout_p, rng)?;
            a1 = mask.apply(a1.view())?;
            Some(mask)
        } else {
            None
        };

        let (y2, fc2) = self.fc2.forward(a1.view())?;
        let (y2, bn2) = self.bn2.forward_train(y2.view(), update_running)?;
        let mut a2 = y2;
        a2.mapv_inplace(|v| v.max_val(R::zero()));
        let relu2 = a2.clone();
        let drop2 = if dropout_p > 0.0 {
            let mask = DropoutMask::sample(a2.nrows(), a2.ncols(), dropout_p, rng)?;
            a2 = mask.apply(a2.view())?;
            Some(mask)
        } else {
            None
        };

        let (emb, fc3) = self.fc3.forward(a2.view())?;
        Ok((
            emb,
            TrainCache {
                lstm1,
                lstm2,
                fc1,
                bn1,
                relu1,
                drop1,
                fc2,
                bn2,
                relu2,
                drop2,
                fc3,
            },
        ))
    }

    /// Backward pass for [`Self::forward_train`]; accumulates parameter
    /// gradients from `∂loss/∂embeddings`.
    pub fn backward(&mut self, cache: TrainCache<R>, d_emb: ArrayView2<R>) -> Result<()> {
        let d = self.fc3.backward(&cache.fc3, d_emb)?;
        let mut d = match &cache.drop2 {
            Some(mask) => mask.apply(d.view())?,
            None => d,
        };
        d.zip_mut_with(&cache.relu2, |g, a| {
            if *a <= R::zero() {
                *g = R::zero();
            }
        });
        let d = self.bn2.backward(&cache.bn2, d.view())?;
        let d = self.fc2.backward(&cache.fc2, d.view())?;

        let mut d = match &cache.drop1 {
            Some(mask) => mask.apply(d.view())?,
            None => d,
        };
        d.zip_mut_with(&cache.relu1, |g, a| {
            if *a <= R::zero() {
                *g = R::zero();
            }
        });
        let d = self.bn1.backward(&cache.bn1, d.view())?;
        let d_last = self.fc1.backward(&cache.fc1, d.view())?;

        let d_h1 = self
            .lstm2
            .backward_batch(cache.lstm2, LstmUpstream::Last(d_last.view()))?;
        self.lstm1
            .backward_batch(cache.lstm1, LstmUpstream::Full(d_h1.view()))?;
        Ok(())
    }

    /// Deterministic inference forward: running batch-norm statistics, no
    /// dropout. Accepts any batch size ≥ 1.
    pub fn forward_eval(&self, x: Array3<R>) -> Result<Array2<R>> {
        let lstm1 = self.lstm1.forward_batch(x)?;
        let h1 = lstm1.seq_output().to_owned();
        drop(lstm1);
        let lstm2 = self.lstm2.forward_batch(h1)?;
        let last = lstm2.last_output().to_owned();
        drop(lstm2);

        let (y1, _) = self.fc1.forward(last.view())?;
        let mut a1 = self.bn1.forward_eval(y1.view())?;
        a1.mapv_inplace(|v| v.max_val(R::zero()));
        let (y2, _) = self.fc2.forward(a1.view())?;
        let mut a2 = self.bn2.forward_eval(y2.view())?;
        a2.mapv_inplace(|v| v.max_val(R::zero()));
        let (emb, _) = self.fc3.forward(a2.view())?;
        Ok(emb)
    }

    /// Embed one standardized feature map (evaluation mode).
    pub fn embed(&self, map: &FeatureMap) -> Result<Embedding> {
        Ok(self.embed_batch(&[map])?.remove(0))
    }

    /// Embed a batch of standardized feature maps (evaluation mode).
    pub fn embed_batch(&self, maps: &[&FeatureMap]) -> Result<Vec<Embedding>> {
        let x = self.build_input(maps)?;
        let emb = self.forward_eval(x)?;
        Ok(emb
            .rows()
            .into_iter()
            .map(|r| Embedding::from_row(r))
            .collect())
    }

    /// Run one triplet through the shared-weight network and evaluate the
    /// margin loss `max(0, d_p² − d_n² + α)`.
    ///
    /// In training mode the three branches form one 3-row batch — batch
    /// normalization needs more than one row, and stacking is the only
    /// well-defined way to honor batch statistics for a lone triplet —
    /// with an independent dropout row per branch and no running-stat
    /// update. Evaluation mode embeds each branch deterministically.
    pub fn triplet_forward(
        &mut self,
        anchor: &FeatureMap,
        positive: &FeatureMap,
        negative: &FeatureMap,
        alpha: f64,
        mode: ForwardMode,
        rng: &mut impl Rng,
    ) -> Result<TripletOutcome> {
        let (ea, ep, en) = match mode {
            ForwardMode::Eval => {
                let mut embs = self.embed_batch(&[anchor, positive, negative])?;
                let en = embs.pop().expect("three embeddings");
                let ep = embs.pop().expect("three embeddings");
                let ea = embs.pop().expect("three embeddings");
                (ea, ep, en)
            }
            ForwardMode::Train { dropout_p, .. } => {
                let x = self.build_input(&[anchor, positive, negative])?;
                let (emb, _) = self.forward_train(x, dropout_p, false, rng)?;
                (
                    Embedding::from_row(emb.row(0)),
                    Embedding::from_row(emb.row(1)),
                    Embedding::from_row(emb.row(2)),
                )
            }
        };
        let d_pos = ea.distance(&ep)?;
        let d_neg = ea.distance(&en)?;
        Ok(TripletOutcome {
            d_pos,
            d_neg,
            loss: triplet_loss(d_pos, d_neg, alpha),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::Array2;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn toy_map(seed: u64, rows: usize, cols: usize) -> FeatureMap {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values = Array2::from_shape_fn((rows, cols), |_| rng.random_range(-2.0f32..2.0));
        FeatureMap {
            values,
            utt_id: format!("toy-{seed}"),
        }
    }

    fn small_dims() -> ArchDims {
        ArchDims {
            input_dim: 6,
            lstm1: 5,
            lstm2: 4,
            dense1: 8,
            dense2: 6,
            embed_dim: 3,
        }
    }

    #[test]
    fn zero_weight_network_emits_all_halves() {
        let net: EmbedderNet<f32> = EmbedderNet::zeros(small_dims(), 0.99).unwrap();
        let map = toy_map(1, 6, 9);
        let emb = net.embed(&map).unwrap();
        assert_eq!(emb.dim(), 3);
        assert!(emb.as_slice().iter().all(|v| *v == 0.5));
    }

    #[test]
    fn eval_embedding_is_deterministic_and_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let net: EmbedderNet<f32> = EmbedderNet::new(small_dims(), 0.99, &mut rng).unwrap();
        let map = toy_map(2, 6, 9);
        let a = net.embed(&map).unwrap();
        let b = net.embed(&map).unwrap();
        assert_eq!(a, b);
        assert!(a.as_slice().iter().all(|v| *v > 0.0 && *v < 1.0));
    }

    #[test]
    fn identical_inputs_give_identical_branch_embeddings() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut net: EmbedderNet<f32> = EmbedderNet::new(small_dims(), 0.99, &mut rng).unwrap();
        let map = toy_map(3, 6, 9);
        let out = net
            .triplet_forward(&map, &map, &map, 0.2, ForwardMode::Eval, &mut rng)
            .unwrap();
        assert_eq!(out.d_pos, 0.0);
        assert_eq!(out.d_neg, 0.0);
        assert_abs_diff_eq!(out.loss, 0.2, epsilon = 1e-12);
    }

    #[test]
    fn triplet_identities_match_distance_algebra() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut net: EmbedderNet<f32> = EmbedderNet::new(small_dims(), 0.99, &mut rng).unwrap();
        let a = toy_map(10, 6, 9);
        let n = toy_map(11, 6, 9);
        // positive ≡ anchor → d_p = 0, loss = max(0, −d_n² + α).
        let out = net
            .triplet_forward(&a, &a, &n, 0.2, ForwardMode::Eval, &mut rng)
            .unwrap();
        assert_eq!(out.d_pos, 0.0);
        assert_abs_diff_eq!(
            out.loss,
            (0.2 - out.d_neg * out.d_neg).max(0.0),
            epsilon = 1e-12
        );
        // negative ≡ anchor → d_n = 0, loss = d_p² + α > 0.
        let out = net
            .triplet_forward(&a, &n, &a, 0.2, ForwardMode::Eval, &mut rng)
            .unwrap();
        assert_eq!(out.d_neg, 0.0);
        assert_abs_diff_eq!(
            out.loss,
            out.d_pos * out.d_pos + 0.2,
            epsilon = 1e-12
        );
        // Zero-weight network: constant embeddings → loss = α exactly.
        let mut zero: EmbedderNet<f32> = EmbedderNet::zeros(small_dims(), 0.99).unwrap();
        let out = zero
            .triplet_forward(&a, &n, &toy_map(12, 6, 9), 0.2, ForwardMode::Eval, &mut rng)
            .unwrap();
        assert_eq!((out.d_pos, out.d_neg), (0.0, 0.0));
        assert_eq!(out.loss, 0.2);
    }

    #[test]
    fn distance_closed_form_and_symmetry() {
        let half = Embedding::from_row(ndarray::Array1::from_elem(128, 0.5f32).view());
        let three_q = Embedding::from_row(ndarray::Array1::from_elem(128, 0.75f32).view());
        let d = half.distance(&three_q).unwrap();
        assert_abs_diff_eq!(d, 0.25 * 128.0f64.sqrt(), epsilon = 1e-6);
        assert_eq!(
            half.distance(&three_q).unwrap(),
            three_q.distance(&half).unwrap()
        );
        assert_eq!(half.distance(&half).unwrap(), 0.0);
        // Bound: components in (0,1) keep distances under √128.
        assert!(d <= 128.0f64.sqrt());
        let short = Embedding::from_row(ndarray::Array1::from_elem(3, 0.5f32).view());
        assert!(matches!(
            half.distance(&short),
            Err(crate::Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn embedding_clamp_keeps_open_interval() {
        let raw = ndarray::arr1(&[0.0f32, 1.0, 0.5, -3.0, 7.0]);
        let e = Embedding::from_row(raw.view());
        assert!(e.as_slice().iter().all(|v| *v > 0.0 && *v < 1.0));
    }

    #[test]
    fn train_forward_rejects_single_row_batches() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut net: EmbedderNet<f32> = EmbedderNet::new(small_dims(), 0.99, &mut rng).unwrap();
        let map = toy_map(5, 6, 9);
        let x = net.build_input(&[&map]).unwrap();
        assert!(matches!(
            net.forward_train(x, 0.2, true, &mut rng),
            Err(crate::Error::BatchTooSmall { n: 1 })
        ));
    }

    #[test]
    fn wrong_feature_geometry_is_rejected() {
        let net: EmbedderNet<f32> = EmbedderNet::zeros(small_dims(), 0.99).unwrap();
        let map = toy_map(6, 5, 9);
        assert!(matches!(
            net.embed(&map),
            Err(crate::Error::ShapeMismatch { .. })
        ));
    }

    /// End-to-end gradient oracle: full architecture at reduced dims in
    /// f64, triplet loss on a 6-row batch, every parameter checked against
    /// central finite differences.
    #[test]
    fn full_network_gradients_match_finite_differences() {
        let dims = ArchDims {
            input_dim: 4,
            lstm1: 3,
            lstm2: 3,
            dense1: 5,
            dense2: 4,
            embed_dim: 3,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let mut net: EmbedderNet<f64> = EmbedderNet::new(dims, 0.99, &mut rng).unwrap();
        let maps: Vec<FeatureMap> = (0..6).map(|i| toy_map(20 + i, 4, 7)).collect();
        let refs: Vec<&FeatureMap> = maps.iter().collect();
        let triplets = [[0usize, 1, 2], [3, 4, 5], [1, 3, 5]];
        let alpha = 0.2;

        // Deterministic loss closure: dropout off (masks would change with
        // rng state), no running-stat updates.
        let loss = |net: &mut EmbedderNet<f64>| -> f64 {
            let x = net.build_input(&refs).unwrap();
            let mut r = ChaCha8Rng::seed_from_u64(0);
            let (emb, _) = net.forward_train(x, 0.0, false, &mut r).unwrap();
            crate::nn::triplet_batch_loss(emb.view(), &triplets, alpha)
                .unwrap()
                .mean_loss
        };

        let x = net.build_input(&refs).unwrap();
        let mut r = ChaCha8Rng::seed_from_u64(0);
        let (emb, cache) = net.forward_train(x, 0.0, false, &mut r).unwrap();
        let grad = crate::nn::triplet_batch_loss(emb.view(), &triplets, alpha).unwrap();
        assert!(grad.mean_loss > 0.0, "test batch must have active triplets");
        net.zero_grads();
        net.backward(cache, grad.d_emb.view()).unwrap();

        let h = 1e-5;
        let n_params = net.params().len();
        for pi in 0..n_params {
            for idx in 0..net.params()[pi].len() {
                let orig = net.params()[pi].values.as_slice().unwrap()[idx];
                net.params_mut()[pi].values.as_slice_mut().unwrap()[idx] = orig + h;
                let up = loss(&mut net);
                net.params_mut()[pi].values.as_slice_mut().unwrap()[idx] = orig - h;
                let down = loss(&mut net);
                net.params_mut()[pi].values.as_slice_mut().unwrap()[idx] = orig;
                let fd = (up - down) / (2.0 * h);
                let analytic = net.params()[pi].grad.as_slice().unwrap()[idx];
                let denom = analytic.abs().max(fd.abs()).max(1e-6);
                assert!(
                    (analytic - fd).abs() / denom < 1e-4,
                    "param {} [{idx}]: analytic {analytic} vs fd {fd}",
                    net.params()[pi].name
                );
            }
        }
    }
}
