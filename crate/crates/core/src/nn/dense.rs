//! Fully connected layer with optional fused activation.

use ndarray::{linalg::general_mat_mul, Array1, Array2, ArrayView2, Axis};
use rand::Rng;

use super::math::Real;
use super::ParamTensor;
use crate::error::{Error, Result};

/// Pointwise nonlinearity fused into a [`DenseLayer`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    /// Affine output, no nonlinearity.
    Linear,
    /// `max(0, x)`.
    Relu,
    /// Logistic sigmoid.
    Sigmoid,
}

/// Values saved by the forward pass that the backward pass consumes.
#[derive(Debug)]
pub struct DenseCache<R: Real> {
    /// Layer input `(batch, in_dim)`.
    pub x: Array2<R>,
    /// Post-activation output `(batch, out_dim)`; all three supported
    /// activations have derivatives expressible from the output alone.
    pub y: Array2<R>,
}

/// `y = act(x·W + b)` with `W: (in_dim, out_dim)`.
#[derive(Debug, Clone)]
pub struct DenseLayer<R: Real> {
    pub w: ParamTensor<R>,
    pub b: ParamTensor<R>,
    pub activation: Activation,
}

impl<R: Real> DenseLayer<R> {
    /// Initialize weights uniformly on `±1/√in_dim` and biases at zero.
    /// `name` prefixes the parameter names (`{name}.w`, `{name}.b`).
    pub fn new(
        name: &str,
        in_dim: usize,
        out_dim: usize,
        activation: Activation,
        rng: &mut impl Rng,
    ) -> Self {
        Self {
            w: ParamTensor::uniform(&format!("{name}.w"), &[in_dim, out_dim], in_dim, rng),
            b: ParamTensor::zeros(&format!("{name}.b"), &[out_dim]),
            activation,
        }
    }

    /// All-zero layer of the given geometry (checkpoint loading).
    pub fn zeros(name: &str, in_dim: usize, out_dim: usize, activation: Activation) -> Self {
        Self {
            w: ParamTensor::zeros(&format!("{name}.w"), &[in_dim, out_dim]),
            b: ParamTensor::zeros(&format!("{name}.b"), &[out_dim]),
            activation,
        }
    }

    pub fn in_dim(&self) -> usize {
        self.w.values.shape()[0]
    }

    pub fn out_dim(&self) -> usize {
        self.w.values.shape()[1]
    }

    /// Forward pass over a batch; returns the output and the cache the
    /// backward pass needs.
    pub fn forward(&self, x: ArrayView2<R>) -> Result<(Array2<R>, DenseCache<R>)> {
        if x.ncols() != self.in_dim() {
            return Err(Error::ShapeMismatch {
                context: format!("dense {} input", self.w.name),
                expected: format!("(batch, {})", self.in_dim()),
                actual: format!("({}, {})", x.nrows(), x.ncols()),
            });
        }
        let w = self
            .w
            .values
            .view()
            .into_dimensionality::<ndarray::Ix2>()
            .expect("dense weight is 2-d");
        let b = self
            .b
            .values
            .view()
            .into_dimensionality::<ndarray::Ix1>()
            .expect("dense bias is 1-d");
        let mut y = x.dot(&w);
        y += &b;
        match self.activation {
            Activation::Linear => {}
            Activation::Relu => y.mapv_inplace(|v| v.max_val(R::zero())),
            Activation::Sigmoid => y.mapv_inplace(|v| v.sigmoid()),
        }
        let cache = DenseCache {
            x: x.to_owned(),
            y: y.clone(),
        };
        Ok((y, cache))
    }

    /// Convenience single-vector forward (batch of one, cache discarded).
    pub fn forward_vec(&self, x: &[R]) -> Result<Vec<R>> {
        let xin = ArrayView2::from_shape((1, x.len()), x).map_err(|_| Error::ShapeMismatch {
            context: format!("dense {} input", self.w.name),
            expected: format!("{}", self.in_dim()),
            actual: format!("{}", x.len()),
        })?;
        let (y, _) = self.forward(xin)?;
        Ok(y.row(0).to_vec())
    }

    /// Backward pass: accumulates `dW` and `db` into the parameter grads
    /// and returns `dx`.
    pub fn backward(&mut self, cache: &DenseCache<R>, dy: ArrayView2<R>) -> Result<Array2<R>> {
        if dy.dim() != cache.y.dim() {
            return Err(Error::ShapeMismatch {
                context: format!("dense {} upstream gradient", self.w.name),
                expected: format!("{:?}", cache.y.dim()),
                actual: format!("{:?}", dy.dim()),
            });
        }
        // dz = dy ⊙ act'(z), written via the cached output y.
        let mut dz = dy.to_owned();
        match self.activation {
            Activation::Linear => {}
            Activation::Relu => dz.zip_mut_with(&cache.y, |d, y| {
                if *y <= R::zero() {
                    *d = R::zero();
                }
            }),
            Activation::Sigmoid => dz.zip_mut_with(&cache.y, |d, y| {
                *d = *d * *y * (R::one() - *y);
            }),
        }
        let w = self
            .w
            .values
            .view()
            .into_dimensionality::<ndarray::Ix2>()
            .expect("dense weight is 2-d");
        let mut dw = self
            .w
            .grad
            .view_mut()
            .into_dimensionality::<ndarray::Ix2>()
            .expect("dense weight grad is 2-d");
        general_mat_mul(R::one(), &cache.x.t(), &dz.view(), R::one(), &mut dw);
        let db_add: Array1<R> = dz.sum_axis(Axis(0));
        let mut db = self
            .b
            .grad
            .view_mut()
            .into_dimensionality::<ndarray::Ix1>()
            .expect("dense bias grad is 1-d");
        db += &db_add;
        Ok(dz.dot(&w.t()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn layer_from(w: Array2<f64>, b: Array1<f64>, act: Activation) -> DenseLayer<f64> {
        let mut l = DenseLayer::zeros("fc", w.nrows(), w.ncols(), act);
        l.w.values = w.into_dyn();
        l.b.values = b.into_dyn();
        l
    }

    #[test]
    fn identity_weights_reproduce_input() {
        let l = layer_from(Array2::eye(3), Array1::zeros(3), Activation::Linear);
        let y = l.forward_vec(&[1.0, -2.0, 0.5]).unwrap();
        assert_eq!(y, vec![1.0, -2.0, 0.5]);
    }

    #[test]
    fn relu_zeroes_negative_preactivations() {
        let l = layer_from(Array2::eye(3), Array1::zeros(3), Activation::Relu);
        let y = l.forward_vec(&[1.0, -2.0, 0.5]).unwrap();
        assert_eq!(y, vec![1.0, 0.0, 0.5]);
    }

    #[test]
    fn sigmoid_of_zero_preactivation_is_half() {
        let l = layer_from(Array2::zeros((4, 2)), Array1::zeros(2), Activation::Sigmoid);
        let y = l.forward_vec(&[3.0, -1.0, 2.0, 7.0]).unwrap();
        assert_eq!(y, vec![0.5, 0.5]);
    }

    #[test]
    fn affine_math_matches_hand_computation() {
        let l = layer_from(
            array![[1.0, 2.0], [3.0, 4.0]],
            array![0.5, -0.5],
            Activation::Linear,
        );
        // y = [1·1 + 2·3 + 0.5, 1·2 + 2·4 − 0.5] = [7.5, 9.5]
        let y = l.forward_vec(&[1.0, 2.0]).unwrap();
        assert_eq!(y, vec![7.5, 9.5]);
    }

    #[test]
    fn wrong_input_width_is_rejected() {
        let l: DenseLayer<f32> = DenseLayer::zeros("fc", 4, 2, Activation::Linear);
        let x = Array2::<f32>::zeros((1, 3));
        assert!(matches!(
            l.forward(x.view()),
            Err(crate::Error::ShapeMismatch { .. })
        ));
    }

    /// Central finite differences over every parameter and the input for a
    /// small batch, for each activation.
    #[test]
    fn gradients_match_finite_differences() {
        for act in [Activation::Linear, Activation::Relu, Activation::Sigmoid] {
            let mut rng = ChaCha8Rng::seed_from_u64(5);
            let mut layer: DenseLayer<f64> = DenseLayer::new("fc", 4, 3, act, &mut rng);
            // Shift biases so ReLU kinks are not sitting exactly at 0.
            layer.b.values.mapv_inplace(|_| 0.05);
            let x = Array2::from_shape_fn((5, 4), |(i, j)| {
                0.3 * ((i * 4 + j) as f64 * 0.7).sin() + 0.1
            });
            // Scalar loss: weighted sum of outputs (weights fixed, nonuniform).
            let w_loss = Array2::from_shape_fn((5, 3), |(i, j)| 0.1 + 0.05 * (i + 2 * j) as f64);
            let loss = |l: &DenseLayer<f64>, x: &Array2<f64>| -> f64 {
                let (y, _) = l.forward(x.view()).unwrap();
                (&y * &w_loss).sum()
            };

            let (_, cache) = layer.forward(x.view()).unwrap();
            layer.w.zero_grad();
            layer.b.zero_grad();
            let dx = layer.backward(&cache, w_loss.view()).unwrap();

            let h = 1e-6;
            let check = |analytic: f64, fd: f64, what: &str| {
                let denom = analytic.abs().max(fd.abs()).max(1e-8);
                assert!(
                    (analytic - fd).abs() / denom < 1e-5,
                    "{what}: analytic {analytic} vs fd {fd} ({act:?})"
                );
            };
            for idx in 0..layer.w.len() {
                let orig = layer.w.values.as_slice().unwrap()[idx];
                layer.w.values.as_slice_mut().unwrap()[idx] = orig + h;
                let up = loss(&layer, &x);
                layer.w.values.as_slice_mut().unwrap()[idx] = orig - h;
                let down = loss(&layer, &x);
                layer.w.values.as_slice_mut().unwrap()[idx] = orig;
                check(
                    layer.w.grad.as_slice().unwrap()[idx],
                    (up - down) / (2.0 * h),
                    "dW",
                );
            }
            for idx in 0..layer.b.len() {
                let orig = layer.b.values.as_slice().unwrap()[idx];
                layer.b.values.as_slice_mut().unwrap()[idx] = orig + h;
                let up = loss(&layer, &x);
                layer.b.values.as_slice_mut().unwrap()[idx] = orig - h;
                let down = loss(&layer, &x);
                layer.b.values.as_slice_mut().unwrap()[idx] = orig;
                check(
                    layer.b.grad.as_slice().unwrap()[idx],
                    (up - down) / (2.0 * h),
                    "db",
                );
            }
            let mut xp = x.clone();
            for i in 0..x.nrows() {
                for j in 0..x.ncols() {
                    let orig = xp[[i, j]];
                    xp[[i, j]] = orig + h;
                    let up = loss(&layer, &xp);
                    xp[[i, j]] = orig - h;
                    let down = loss(&layer, &xp);
                    xp[[i, j]] = orig;
                    check(dx[[i, j]], (up - down) / (2.0 * h), "dx");
                }
            }
        }
    }
}
