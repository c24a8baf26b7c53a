//! Inverted dropout.

use ndarray::{Array2, ArrayView2};
use rand::Rng;

use super::math::Real;
use crate::error::{Error, Result};

/// A sampled dropout mask with the `1/(1−p)` keep scaling folded in, so
/// applying it is a single elementwise multiply and the expected value of
/// the output matches the input. The same mask multiplies the upstream
/// gradient on the way back.
#[derive(Debug, Clone)]
pub struct DropoutMask<R: Real> {
    scale: Array2<R>,
}

impl<R: Real> DropoutMask<R> {
    /// Draw a mask for a `(rows, cols)` activation with drop probability
    /// `p ∈ [0, 1)`. Entries are drawn row-major, one uniform per element,
    /// so the consumed random stream is shape-deterministic. `p = 0` draws
    /// nothing and yields the identity mask.
    pub fn sample(rows: usize, cols: usize, p: f64, rng: &mut impl Rng) -> Result<Self> {
        if !(0.0..1.0).contains(&p) {
            return Err(Error::InvalidConfig(format!(
                "dropout probability must be in [0, 1), got {p}"
            )));
        }
        let scale = if p == 0.0 {
            Array2::from_elem((rows, cols), R::one())
        } else {
            let keep = R::from_f64(1.0 / (1.0 - p));
            Array2::from_shape_fn((rows, cols), |_| {
                if rng.random::<f64>() < p {
                    R::zero()
                } else {
                    keep
                }
            })
        };
        Ok(Self { scale })
    }

    /// Apply the mask (forward and backward are the same multiply).
    pub fn apply(&self, x: ArrayView2<R>) -> Result<Array2<R>> {
        if x.dim() != self.scale.dim() {
            return Err(Error::ShapeMismatch {
                context: "dropout mask".to_string(),
                expected: format!("{:?}", self.scale.dim()),
                actual: format!("{:?}", x.dim()),
            });
        }
        Ok(&x * &self.scale)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_probability_is_identity_without_consuming_rng() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let before = rng.clone().random::<u64>();
        let mask: DropoutMask<f32> = DropoutMask::sample(4, 4, 0.0, &mut rng).unwrap();
        assert_eq!(rng.random::<u64>(), before, "rng must be untouched");
        let x = Array2::from_elem((4, 4), 3.0f32);
        assert_eq!(mask.apply(x.view()).unwrap(), x);
    }

    #[test]
    fn expected_value_is_preserved_within_two_percent() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let x = Array2::from_elem((100, 1000), 1.0f64);
        let mask = DropoutMask::sample(100, 1000, 0.2, &mut rng).unwrap();
        let y = mask.apply(x.view()).unwrap();
        let mean = y.sum() / y.len() as f64;
        assert!(
            (mean - 1.0).abs() < 0.02,
            "post-dropout mean {mean} drifted more than 2%"
        );
        // Surviving entries are exactly 1/(1−p).
        for &v in y.iter() {
            assert!(v == 0.0 || (v - 1.25).abs() < 1e-12);
        }
    }

    #[test]
    fn same_seed_same_mask() {
        let a: DropoutMask<f32> =
            DropoutMask::sample(8, 8, 0.5, &mut ChaCha8Rng::seed_from_u64(42)).unwrap();
        let b: DropoutMask<f32> =
            DropoutMask::sample(8, 8, 0.5, &mut ChaCha8Rng::seed_from_u64(42)).unwrap();
        assert_eq!(a.scale, b.scale);
    }

    #[test]
    fn invalid_probability_is_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(DropoutMask::<f32>::sample(2, 2, 1.0, &mut rng).is_err());
        assert!(DropoutMask::<f32>::sample(2, 2, -0.1, &mut rng).is_err());
    }
}
