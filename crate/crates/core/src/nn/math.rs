//! Scalar abstraction and activation functions.
//!
//! Training runs in f32 with polynomial `exp`-based activations that the
//! compiler can auto-vectorize; gradient checks run in f64 with libm-exact
//! transcendentals. Both satisfy `sigmoid(0) = 0.5` and `tanh(0) = 0`
//! exactly, and the f32 versions stay within ~2 ulp of the f64 reference.

/// Scalar type the numeric kernels are generic over.
///
/// `f32` is the training dtype; `f64` exists so finite-difference gradient
/// oracles can run the identical code path at full precision.
pub trait Real:
    ndarray::LinalgScalar
    + ndarray::ScalarOperand
    + std::ops::Neg<Output = Self>
    + std::ops::AddAssign
    + std::ops::SubAssign
    + std::ops::MulAssign
    + PartialOrd
    + std::fmt::Debug
    + std::fmt::Display
    + serde::Serialize
    + Send
    + Sync
{
    fn from_f64(v: f64) -> Self;
    fn to_f64(self) -> f64;
    fn sigmoid(self) -> Self;
    fn tanh_act(self) -> Self;
    fn finite(self) -> bool;
    fn sqrt_val(self) -> Self;
    fn abs_val(self) -> Self;
    fn max_val(self, other: Self) -> Self;
}

impl Real for f32 {
    #[inline(always)]
    fn from_f64(v: f64) -> f32 {
        v as f32
    }
    #[inline(always)]
    fn to_f64(self) -> f64 {
        f64::from(self)
    }
    #[inline(always)]
    fn sigmoid(self) -> f32 {
        sigmoid_f32(self)
    }
    #[inline(always)]
    fn tanh_act(self) -> f32 {
        tanh_f32(self)
    }
    #[inline(always)]
    fn finite(self) -> bool {
        self.is_finite()
    }
    #[inline(always)]
    fn sqrt_val(self) -> f32 {
        self.sqrt()
    }
    #[inline(always)]
    fn abs_val(self) -> f32 {
        self.abs()
    }
    #[inline(always)]
    fn max_val(self, other: f32) -> f32 {
        self.max(other)
    }
}

impl Real for f64 {
    #[inline(always)]
    fn from_f64(v: f64) -> f64 {
        v
    }
    #[inline(always)]
    fn to_f64(self) -> f64 {
        self
    }
    #[inline(always)]
    fn sigmoid(self) -> f64 {
        // Numerically stable two-branch form.
        if self >= 0.0 {
            1.0 / (1.0 + (-self).exp())
        } else {
            let e = self.exp();
            e / (1.0 + e)
        }
    }
    #[inline(always)]
    fn tanh_act(self) -> f64 {
        self.tanh()
    }
    #[inline(always)]
    fn finite(self) -> bool {
        self.is_finite()
    }
    #[inline(always)]
    fn sqrt_val(self) -> f64 {
        self.sqrt()
    }
    #[inline(always)]
    fn abs_val(self) -> f64 {
        self.abs()
    }
    #[inline(always)]
    fn max_val(self, other: f64) -> f64 {
        self.max(other)
    }
}

/// Vectorizable f32 exponential: `2^k · exp(r)` with a degree-6 polynomial
/// for the residual. The residual comes from a Cody–Waite two-constant
/// reduction (`ln2` split into a short exact head and a correction tail)
/// so accuracy does not degrade with |x|. Exact at 0; relative error ≲ 5e-7.
#[inline(always)]
pub fn exp_f32(x: f32) -> f32 {
    // Head has 9 significand bits, so k·LN2_HI is exact for |k| < 2^15.
    const LN2_HI: f32 = 0.693_359_375;
    const LN2_LO: f32 = -2.121_944_4e-4;
    let x = x.clamp(-87.0, 88.0);
    let k = (x * std::f32::consts::LOG2_E + 0.5).floor();
    let r = (x - k * LN2_HI) - k * LN2_LO;
    let p = 1.0
        + r * (1.0
            + r * (0.5
                + r * (1.0 / 6.0
                    + r * (1.0 / 24.0 + r * (1.0 / 120.0 + r * (1.0 / 720.0))))));
    // k ∈ [−126, 127] after the clamp, so the exponent bits stay normal.
    let two_k = f32::from_bits((((k as i32) + 127) << 23) as u32);
    two_k * p
}

/// `exp(x) − 1` via the same reduction as [`exp_f32`], but with the
/// leading 1 of the polynomial folded out so small arguments keep full
/// relative accuracy (`exp_f32(x) − 1` would cancel catastrophically).
#[inline(always)]
pub fn expm1_f32(x: f32) -> f32 {
    const LN2_HI: f32 = 0.693_359_375;
    const LN2_LO: f32 = -2.121_944_4e-4;
    let x = x.clamp(-87.0, 88.0);
    let k = (x * std::f32::consts::LOG2_E + 0.5).floor();
    let r = (x - k * LN2_HI) - k * LN2_LO;
    // q = exp(r) − 1, no constant term.
    let q = r * (1.0
        + r * (0.5
            + r * (1.0 / 6.0
                + r * (1.0 / 24.0 + r * (1.0 / 120.0 + r * (1.0 / 720.0))))));
    let two_k = f32::from_bits((((k as i32) + 127) << 23) as u32);
    // 2^k·(q + 1) − 1; exact when k = 0, cancellation-free otherwise
    // because |result| ≥ 2^(1/2) − 1 there.
    two_k * q + (two_k - 1.0)
}

/// Logistic sigmoid built on [`exp_f32`]; `sigmoid_f32(0) == 0.5` exactly.
#[inline(always)]
pub fn sigmoid_f32(x: f32) -> f32 {
    1.0 / (1.0 + exp_f32(-x))
}

/// Hyperbolic tangent as `expm1(2x)/(expm1(2x) + 2)`; `tanh_f32(0) == 0`
/// exactly and small arguments do not cancel.
#[inline(always)]
pub fn tanh_f32(x: f32) -> f32 {
    let em1 = expm1_f32(2.0 * x);
    em1 / (em1 + 2.0)
}

/// Apply the sigmoid in place over a slice (monomorphizes to a tight
/// vectorizable loop for f32).
#[inline]
pub fn sigmoid_slice<R: Real>(xs: &mut [R]) {
    for x in xs {
        *x = x.sigmoid();
    }
}

/// Apply tanh in place over a slice.
#[inline]
pub fn tanh_slice<R: Real>(xs: &mut [R]) {
    for x in xs {
        *x = x.tanh_act();
    }
}
