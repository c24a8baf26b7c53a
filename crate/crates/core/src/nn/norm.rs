//! Batch normalization over feature columns.

use ndarray::{Array1, Array2, ArrayView2, Axis};

use super::math::Real;
use super::ParamTensor;
use crate::error::{Error, Result};

/// Forward-pass values the backward pass reuses.
#[derive(Debug)]
pub struct BnCache<R: Real> {
    /// Normalized activations `(x − μ)/√(σ² + ε)`.
    pub xhat: Array2<R>,
    /// Per-feature `1/√(σ² + ε)`.
    pub inv_std: Array1<R>,
}

/// Per-feature batch normalization: `y = γ·x̂ + β`.
///
/// Training mode normalizes by the current batch's mean and *biased*
/// variance and folds those statistics into the running averages as
/// `running = m·running + (1−m)·batch`. Evaluation mode normalizes by the
/// stored running statistics and never mutates them.
#[derive(Debug, Clone)]
pub struct BatchNorm<R: Real> {
    pub gamma: ParamTensor<R>,
    pub beta: ParamTensor<R>,
    pub running_mean: Array1<R>,
    pub running_var: Array1<R>,
    /// Running-average momentum `m`.
    pub momentum: f64,
    /// Variance fuzz ε.
    pub eps: f64,
}

impl<R: Real> BatchNorm<R> {
    /// Fresh layer: γ = 1, β = 0, running mean 0, running variance 1.
    pub fn new(name: &str, dim: usize, momentum: f64, eps: f64) -> Self {
        let mut gamma = ParamTensor::zeros(&format!("{name}.gamma"), &[dim]);
        gamma.values.fill(R::one());
        Self {
            gamma,
            beta: ParamTensor::zeros(&format!("{name}.beta"), &[dim]),
            running_mean: Array1::zeros(dim),
            running_var: Array1::from_elem(dim, R::one()),
            momentum,
            eps,
        }
    }

    pub fn dim(&self) -> usize {
        self.gamma.len()
    }

    fn check_width(&self, x: &ArrayView2<R>, context: &str) -> Result<()> {
        if x.ncols() != self.dim() {
            return Err(Error::ShapeMismatch {
                context: format!("batch norm {} {context}", self.gamma.name),
                expected: format!("(batch, {})", self.dim()),
                actual: format!("({}, {})", x.nrows(), x.ncols()),
            });
        }
        Ok(())
    }

    /// Training forward over a batch of at least two rows.
    ///
    /// `update_running` controls whether the running averages absorb this
    /// batch (the trainer updates them from the anchor branch only, so the
    /// positive/negative branches pass `false`).
    pub fn forward_train(
        &mut self,
        x: ArrayView2<R>,
        update_running: bool,
    ) -> Result<(Array2<R>, BnCache<R>)> {
        self.check_width(&x, "train input")?;
        let n = x.nrows();
        if n < 2 {
            return Err(Error::BatchTooSmall { n });
        }
        let inv_n = R::from_f64(1.0 / n as f64);
        let mean: Array1<R> = x.sum_axis(Axis(0)) * inv_n;
        let mut xhat = x.to_owned();
        xhat -= &mean;
        // Biased variance: mean of squared deviations.
        let var: Array1<R> = xhat.map(|v| *v * *v).sum_axis(Axis(0)) * inv_n;
        let inv_std: Array1<R> =
            var.map(|v| R::one() / (*v + R::from_f64(self.eps)).sqrt_val());
        xhat *= &inv_std;

        if update_running {
            let m = R::from_f64(self.momentum);
            let one_minus = R::from_f64(1.0 - self.momentum);
            ndarray::Zip::from(&mut self.running_mean)
                .and(&mean)
                .for_each(|r, &b| *r = m * *r + one_minus * b);
            ndarray::Zip::from(&mut self.running_var)
                .and(&var)
                .for_each(|r, &b| *r = m * *r + one_minus * b);
        }

        let gamma = self
            .gamma
            .values
            .view()
            .into_dimensionality::<ndarray::Ix1>()
            .expect("gamma is 1-d");
        let beta = self
            .beta
            .values
            .view()
            .into_dimensionality::<ndarray::Ix1>()
            .expect("beta is 1-d");
        let mut y = xhat.clone();
        y *= &gamma;
        y += &beta;
        Ok((y, BnCache { xhat, inv_std }))
    }

    /// Evaluation forward: normalize by the running statistics.
    pub fn forward_eval(&self, x: ArrayView2<R>) -> Result<Array2<R>> {
        self.check_width(&x, "eval input")?;
        let gamma = self
            .gamma
            .values
            .view()
            .into_dimensionality::<ndarray::Ix1>()
            .expect("gamma is 1-d");
        let beta = self
            .beta
            .values
            .view()
            .into_dimensionality::<ndarray::Ix1>()
            .expect("beta is 1-d");
        let inv_std: Array1<R> = self
            .running_var
            .map(|v| R::one() / (*v + R::from_f64(self.eps)).sqrt_val());
        let mut y = x.to_owned();
        y -= &self.running_mean;
        y *= &inv_std;
        y *= &gamma;
        y += &beta;
        Ok(y)
    }

    /// Backward pass through the training normalization; accumulates
    /// `dγ`/`dβ` and returns `dx`.
    ///
    /// With `N` rows and per-feature sums `Σ`, the input gradient is
    /// `dx = inv_std/N · (N·dx̂ − Σdx̂ − x̂·Σ(dx̂⊙x̂))` where `dx̂ = dy·γ`.
    pub fn backward(&mut self, cache: &BnCache<R>, dy: ArrayView2<R>) -> Result<Array2<R>> {
        if dy.dim() != cache.xhat.dim() {
            return Err(Error::ShapeMismatch {
                context: format!("batch norm {} upstream gradient", self.gamma.name),
                expected: format!("{:?}", cache.xhat.dim()),
                actual: format!("{:?}", dy.dim()),
            });
        }
        let n = R::from_f64(cache.xhat.nrows() as f64);
        let gamma = self
            .gamma
            .values
            .view()
            .into_dimensionality::<ndarray::Ix1>()
            .expect("gamma is 1-d");

        let dgamma_add: Array1<R> = (&dy * &cache.xhat).sum_axis(Axis(0));
        let dbeta_add: Array1<R> = dy.sum_axis(Axis(0));
        {
            let mut dgamma = self
                .gamma
                .grad
                .view_mut()
                .into_dimensionality::<ndarray::Ix1>()
                .expect("gamma grad is 1-d");
            dgamma += &dgamma_add;
            let mut dbeta = self
                .beta
                .grad
                .view_mut()
                .into_dimensionality::<ndarray::Ix1>()
                .expect("beta grad is 1-d");
            dbeta += &dbeta_add;
        }

        let mut dxhat = dy.to_owned();
        dxhat *= &gamma;
        let sum_dxhat: Array1<R> = dxhat.sum_axis(Axis(0));
        let sum_dxhat_xhat: Array1<R> = (&dxhat * &cache.xhat).sum_axis(Axis(0));

        let mut dx = dxhat;
        dx *= n;
        dx -= &sum_dxhat;
        dx -= &(&cache.xhat * &sum_dxhat_xhat);
        dx *= &cache.inv_std;
        dx.mapv_inplace(|v| v / n);
        Ok(dx)
    }
}
