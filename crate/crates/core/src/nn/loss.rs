//! Squared-distance triplet loss with hinge margin.

use ndarray::{Array2, ArrayView2};

use super::math::Real;
use crate::error::{Error, Result};

/// Hinge triplet loss from *unsquared* embedding distances:
/// `L = max(0, d_p² − d_n² + α)`.
pub fn triplet_loss(d_pos: f64, d_neg: f64, alpha: f64) -> f64 {
    (d_pos * d_pos - d_neg * d_neg + alpha).max(0.0)
}

/// Output of [`triplet_batch_loss`]: the scalar objective and its gradient
/// with respect to every embedding row.
#[derive(Debug)]
pub struct TripletBatchGrad<R: Real> {
    /// Mean hinge loss over all triplets (inactive ones contribute 0).
    pub mean_loss: f64,
    /// Number of triplets with a nonzero hinge.
    pub active: usize,
    /// `∂(mean loss)/∂embeddings`, same shape as the embedding matrix.
    pub d_emb: Array2<R>,
}

/// Mean triplet loss over index triples into an embedding matrix
/// `(N, embed_dim)`, together with its gradient.
///
/// For each active triplet `(a, p, n)` the mean-loss gradient receives
/// `de_a += (2/K)·((e_a − e_p) − (e_a − e_n))`,
/// `de_p += −(2/K)·(e_a − e_p)` and `de_n += (2/K)·(e_a − e_n)` where `K`
/// is the triplet count; triplets with an inactive hinge contribute
/// nothing. Accumulation runs in triplet order, so the result is
/// deterministic.
pub fn triplet_batch_loss<R: Real>(
    embeddings: ArrayView2<R>,
    triplets: &[[usize; 3]],
    alpha: f64,
) -> Result<TripletBatchGrad<R>> {
    if triplets.is_empty() {
        return Err(Error::EmptyRecords {
            context: "triplet batch".to_string(),
        });
    }
    let n_rows = embeddings.nrows();
    for t in triplets {
        for &idx in t {
            if idx >= n_rows {
                return Err(Error::ShapeMismatch {
                    context: "triplet index".to_string(),
                    expected: format!("< {n_rows}"),
                    actual: idx.to_string(),
                });
            }
        }
    }

    let k = triplets.len();
    let scale = R::from_f64(2.0 / k as f64);
    let mut d_emb = Array2::<R>::zeros(embeddings.raw_dim());
    let mut loss_sum = 0.0f64;
    let mut active = 0usize;

    for &[a, p, n] in triplets {
        let ea = embeddings.row(a);
        let ep = embeddings.row(p);
        let en = embeddings.row(n);
        let mut d_pos_sq = 0.0f64;
        let mut d_neg_sq = 0.0f64;
        for j in 0..embeddings.ncols() {
            let dp = (ea[j] - ep[j]).to_f64();
            let dn = (ea[j] - en[j]).to_f64();
            d_pos_sq += dp * dp;
            d_neg_sq += dn * dn;
        }
        let hinge = d_pos_sq - d_neg_sq + alpha;
        if hinge > 0.0 {
            loss_sum += hinge;
            active += 1;
            for j in 0..embeddings.ncols() {
                let ap = ea[j] - ep[j];
                let an = ea[j] - en[j];
                d_emb[[a, j]] += scale * (ap - an);
                d_emb[[p, j]] -= scale * ap;
                d_emb[[n, j]] += scale * an;
            }
        }
    }

    Ok(TripletBatchGrad {
        mean_loss: loss_sum / k as f64,
        active,
        d_emb,
    })
}
