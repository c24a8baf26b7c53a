//! Single LSTM layer with explicit backpropagation through time.
//!
//! Gate algebra per step (σ = sigmoid, ⊙ = elementwise product):
//!
//! ```text
//! i = σ(W_i·x + U_i·h + b_i)      f = σ(W_f·x + U_f·h + b_f)
//! g = tanh(W_g·x + U_g·h + b_g)   o = σ(W_o·x + U_o·h + b_o)
//! c ← f ⊙ c + i ⊙ g               h ← o ⊙ tanh(c)
//! ```
//!
//! The four gates are packed into single matrices with column blocks in
//! `[i | f | g | o]` order, so each step costs two matrix products: one
//! batched input projection hoisted out of the time loop, and one
//! recurrent product per step.

use ndarray::{linalg::general_mat_mul, s, Array1, Array2, Array3, ArrayView2, ArrayView3, Axis};
use rand::Rng;

use super::math::{sigmoid_slice, tanh_slice, Real};
use super::ParamTensor;
use crate::error::{Error, Result};

/// Everything the forward pass computed, kept for the backward pass.
///
/// `h` and `c` carry `T + 1` steps with the all-zero initial state at
/// index 0, so step `t` reads its previous state at index `t` and writes
/// index `t + 1`.
#[derive(Debug)]
pub struct LstmCache<R: Real> {
    /// Input sequence `(T, B, in_dim)`.
    pub x: Array3<R>,
    /// Post-activation gate values `(T, B, 4H)` in `[i|f|g|o]` block
    /// order. The backward pass overwrites these with the pre-activation
    /// gradients in place.
    gates: Array3<R>,
    /// Cell states `(T + 1, B, H)`.
    c: Array3<R>,
    /// `tanh(c_t)` for each step, `(T, B, H)`.
    tanh_c: Array3<R>,
    /// Hidden states `(T + 1, B, H)`.
    h: Array3<R>,
}

impl<R: Real> LstmCache<R> {
    /// Hidden states for every step, `(T, B, H)`.
    pub fn seq_output(&self) -> ArrayView3<'_, R> {
        let t_len = self.x.dim().0;
        self.h.slice(s![1..=t_len, .., ..])
    }

    /// Final hidden state, `(B, H)`.
    pub fn last_output(&self) -> ArrayView2<'_, R> {
        let t_len = self.x.dim().0;
        self.h.index_axis(Axis(0), t_len)
    }
}

/// Gradient arriving from above: either one per time step (when the next
/// layer consumed the full sequence) or only at the final state.
pub enum LstmUpstream<'a, R: Real> {
    Full(ArrayView3<'a, R>),
    Last(ArrayView2<'a, R>),
}

/// LSTM layer parameters.
#[derive(Debug, Clone)]
pub struct LstmLayer<R: Real> {
    /// Input weights `(in_dim, 4H)`.
    pub w: ParamTensor<R>,
    /// Recurrent weights `(H, 4H)`.
    pub u: ParamTensor<R>,
    /// Bias `(4H)`.
    pub b: ParamTensor<R>,
    pub hidden: usize,
}

impl<R: Real> LstmLayer<R> {
    /// Initialize weights uniformly on `±1/√fan_in` (input weights use the
    /// input width, recurrent weights the hidden width), biases at zero
    /// except the forget-gate block which starts at +1 so early training
    /// retains cell state.
    pub fn new(name: &str, in_dim: usize, hidden: usize, rng: &mut impl Rng) -> Self {
        let w = ParamTensor::uniform(&format!("{name}.w"), &[in_dim, 4 * hidden], in_dim, rng);
        let u = ParamTensor::uniform(&format!("{name}.u"), &[hidden, 4 * hidden], hidden, rng);
        let mut b = ParamTensor::zeros(&format!("{name}.b"), &[4 * hidden]);
        for j in hidden..2 * hidden {
            b.values[j] = R::one();
        }
        Self { w, u, b, hidden }
    }

    /// All-zero layer of the given geometry (checkpoint loading).
    pub fn zeros(name: &str, in_dim: usize, hidden: usize) -> Self {
        Self {
            w: ParamTensor::zeros(&format!("{name}.w"), &[in_dim, 4 * hidden]),
            u: ParamTensor::zeros(&format!("{name}.u"), &[hidden, 4 * hidden]),
            b: ParamTensor::zeros(&format!("{name}.b"), &[4 * hidden]),
            hidden,
        }
    }

    pub fn in_dim(&self) -> usize {
        self.w.values.shape()[0]
    }

    /// Run the recurrence over a `(T, B, in_dim)` batch starting from the
    /// all-zero state. The returned cache holds the full hidden-state
    /// trajectory; use [`LstmCache::seq_output`] / [`LstmCache::last_output`]
    /// to read it.
    pub fn forward_batch(&self, x: Array3<R>) -> Result<LstmCache<R>> {
        let (t_len, batch, d) = x.dim();
        if t_len == 0 || batch == 0 {
            return Err(Error::ShapeMismatch {
                context: format!("lstm {} input", self.w.name),
                expected: "nonzero time and batch sizes".to_string(),
                actual: format!("({t_len}, {batch}, {d})"),
            });
        }
        if d != self.in_dim() {
            return Err(Error::ShapeMismatch {
                context: format!("lstm {} input", self.w.name),
                expected: format!("(T, B, {})", self.in_dim()),
                actual: format!("({t_len}, {batch}, {d})"),
            });
        }
        let h_dim = self.hidden;
        let w = self
            .w
            .values
            .view()
            .into_dimensionality::<ndarray::Ix2>()
            .expect("lstm input weight is 2-d");
        let u = self
            .u
            .values
            .view()
            .into_dimensionality::<ndarray::Ix2>()
            .expect("lstm recurrent weight is 2-d");
        let b = self
            .b
            .values
            .view()
            .into_dimensionality::<ndarray::Ix1>()
            .expect("lstm bias is 1-d");

        // Input projection for all steps at once: (T·B, D)·(D, 4H).
        let xf = x
            .view()
            .into_shape_with_order((t_len * batch, d))
            .expect("input is standard layout");
        let mut gates = xf
            .dot(&w)
            .into_shape_with_order((t_len, batch, 4 * h_dim))
            .expect("projection is standard layout");
        gates += &b;

        let mut c = Array3::<R>::zeros((t_len + 1, batch, h_dim));
        let mut h = Array3::<R>::zeros((t_len + 1, batch, h_dim));
        let mut tanh_c = Array3::<R>::zeros((t_len, batch, h_dim));

        for t in 0..t_len {
            {
                let h_prev = h.index_axis(Axis(0), t);
                let mut z_t = gates.index_axis_mut(Axis(0), t);
                general_mat_mul(R::one(), &h_prev, &u, R::one(), &mut z_t);
            }
            let z_slab = gates
                .index_axis_mut(Axis(0), t)
                .into_slice_memory_order()
                .expect("gate slab is contiguous");
            let (c_lo, mut c_hi) = c.view_mut().split_at(Axis(0), t + 1);
            let c_prev = c_lo
                .index_axis(Axis(0), t)
                .to_slice()
                .expect("cell slab is contiguous")
                .to_vec();
            let c_next = c_hi
                .index_axis_mut(Axis(0), 0)
                .into_slice_memory_order()
                .expect("cell slab is contiguous");
            let tc_slab = tanh_c
                .index_axis_mut(Axis(0), t)
                .into_slice_memory_order()
                .expect("tanh slab is contiguous");
            let h_next = h
                .index_axis_mut(Axis(0), t + 1)
                .into_slice_memory_order()
                .expect("hidden slab is contiguous");

            for bi in 0..batch {
                let z = &mut z_slab[bi * 4 * h_dim..(bi + 1) * 4 * h_dim];
                sigmoid_slice(&mut z[..2 * h_dim]);
                tanh_slice(&mut z[2 * h_dim..3 * h_dim]);
                sigmoid_slice(&mut z[3 * h_dim..]);
                let base = bi * h_dim;
                for j in 0..h_dim {
                    let i_g = z[j];
                    let f_g = z[h_dim + j];
                    let g_g = z[2 * h_dim + j];
                    let o_g = z[3 * h_dim + j];
                    let c_new = f_g * c_prev[base + j] + i_g * g_g;
                    let tc = c_new.tanh_act();
                    c_next[base + j] = c_new;
                    tc_slab[base + j] = tc;
                    h_next[base + j] = o_g * tc;
                }
            }
        }

        Ok(LstmCache {
            x,
            gates,
            c,
            tanh_c,
            h,
        })
    }

    /// Backpropagation through time. Consumes the cache (gate activations
    /// are overwritten with pre-activation gradients in place), accumulates
    /// `dW`/`dU`/`db`, and returns the input gradient `(T, B, in_dim)`.
    pub fn backward_batch(
        &mut self,
        mut cache: LstmCache<R>,
        upstream: LstmUpstream<'_, R>,
    ) -> Result<Array3<R>> {
        let (t_len, batch, d) = cache.x.dim();
        let h_dim = self.hidden;
        match &upstream {
            LstmUpstream::Full(g) => {
                if g.dim() != (t_len, batch, h_dim) {
                    return Err(Error::ShapeMismatch {
                        context: format!("lstm {} upstream gradient", self.w.name),
                        expected: format!("({t_len}, {batch}, {h_dim})"),
                        actual: format!("{:?}", g.dim()),
                    });
                }
            }
            LstmUpstream::Last(g) => {
                if g.dim() != (batch, h_dim) {
                    return Err(Error::ShapeMismatch {
                        context: format!("lstm {} upstream gradient", self.w.name),
                        expected: format!("({batch}, {h_dim})"),
                        actual: format!("{:?}", g.dim()),
                    });
                }
            }
        }
        let u = self
            .u
            .values
            .view()
            .into_dimensionality::<ndarray::Ix2>()
            .expect("lstm recurrent weight is 2-d");

        let mut dh = Array2::<R>::zeros((batch, h_dim));
        let mut dh_rec = Array2::<R>::zeros((batch, h_dim));
        let mut dc = Array2::<R>::zeros((batch, h_dim));

        for t in (0..t_len).rev() {
            match &upstream {
                LstmUpstream::Full(g) => {
                    dh.assign(&g.index_axis(Axis(0), t));
                    dh += &dh_rec;
                }
                LstmUpstream::Last(g) => {
                    if t == t_len - 1 {
                        dh.assign(g);
                    } else {
                        dh.assign(&dh_rec);
                    }
                }
            }
            {
                let z_slab = cache
                    .gates
                    .index_axis_mut(Axis(0), t)
                    .into_slice_memory_order()
                    .expect("gate slab is contiguous");
                let c_prev_view = cache.c.index_axis(Axis(0), t);
                let c_prev = c_prev_view.to_slice().expect("cell slab is contiguous");
                let tc_view = cache.tanh_c.index_axis(Axis(0), t);
                let tc = tc_view.to_slice().expect("tanh slab is contiguous");
                let dh_s = dh.as_slice().expect("dh is contiguous");
                let dc_s = dc.as_slice_mut().expect("dc is contiguous");

                for bi in 0..batch {
                    let z = &mut z_slab[bi * 4 * h_dim..(bi + 1) * 4 * h_dim];
                    let base = bi * h_dim;
                    for j in 0..h_dim {
                        let i_g = z[j];
                        let f_g = z[h_dim + j];
                        let g_g = z[2 * h_dim + j];
                        let o_g = z[3 * h_dim + j];
                        let a = tc[base + j];
                        let dh_j = dh_s[base + j];
                        let dc_j = dc_s[base + j] + dh_j * o_g * (R::one() - a * a);
                        let di = dc_j * g_g;
                        let dg = dc_j * i_g;
                        let df = dc_j * c_prev[base + j];
                        let do_ = dh_j * a;
                        z[j] = di * i_g * (R::one() - i_g);
                        z[h_dim + j] = df * f_g * (R::one() - f_g);
                        z[2 * h_dim + j] = dg * (R::one() - g_g * g_g);
                        z[3 * h_dim + j] = do_ * o_g * (R::one() - o_g);
                        dc_s[base + j] = dc_j * f_g;
                    }
                }
            }
            let dz_t = cache.gates.index_axis(Axis(0), t);
            general_mat_mul(R::one(), &dz_t, &u.t(), R::zero(), &mut dh_rec);
        }

        // Weight gradients as single flattened products over all steps.
        let dz_flat = cache
            .gates
            .view()
            .into_shape_with_order((t_len * batch, 4 * h_dim))
            .expect("gates are standard layout");
        let x_flat = cache
            .x
            .view()
            .into_shape_with_order((t_len * batch, d))
            .expect("input is standard layout");
        let h_prev_slice = cache.h.slice(s![0..t_len, .., ..]);
        let h_prev_flat = h_prev_slice
            .to_shape((t_len * batch, h_dim))
            .expect("hidden prefix is contiguous");
        {
            let mut dw = self
                .w
                .grad
                .view_mut()
                .into_dimensionality::<ndarray::Ix2>()
                .expect("lstm input weight grad is 2-d");
            general_mat_mul(R::one(), &x_flat.t(), &dz_flat, R::one(), &mut dw);
            let mut du = self
                .u
                .grad
                .view_mut()
                .into_dimensionality::<ndarray::Ix2>()
                .expect("lstm recurrent weight grad is 2-d");
            general_mat_mul(R::one(), &h_prev_flat.t(), &dz_flat, R::one(), &mut du);
            let db_add: Array1<R> = dz_flat.sum_axis(Axis(0));
            let mut db = self
                .b
                .grad
                .view_mut()
                .into_dimensionality::<ndarray::Ix1>()
                .expect("lstm bias grad is 1-d");
            db += &db_add;
        }
        let w = self
            .w
            .values
            .view()
            .into_dimensionality::<ndarray::Ix2>()
            .expect("lstm input weight is 2-d");
        let dx = dz_flat
            .dot(&w.t())
            .into_shape_with_order((t_len, batch, d))
            .expect("input gradient is standard layout");
        Ok(dx)
    }
}
