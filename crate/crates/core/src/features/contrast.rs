//! Spectral contrast (peak-minus-valley per sub-band) and the per-frame
//! spectral energy envelope.

use ndarray::Array2;

use crate::error::{Error, Result};

use super::SpectralConfig;

/// Inclusive-exclusive FFT-bin ranges for the contrast sub-bands.
///
/// Bands are octave-scaled starting at `contrast_fmin`: the base band
/// `[0, fmin)`, then `[fmin, 2·fmin)`, …, with the final (residual) band
/// capped at the Nyquist bin inclusive. `contrast_bands` octave splits yield
/// `contrast_bands + 1` rows.
pub fn contrast_band_ranges(
    cfg: &SpectralConfig,
    sample_rate: u32,
) -> Result<Vec<(usize, usize)>> {
    let bins = cfg.fft_size / 2 + 1;
    let bin_hz = f64::from(sample_rate) / cfg.fft_size as f64;
    let nyquist = f64::from(sample_rate) / 2.0;

    let mut edges = vec![0.0f64];
    let mut f = cfg.contrast_fmin;
    for _ in 0..cfg.contrast_bands {
        edges.push(f);
        f *= 2.0;
    }
    edges.push(nyquist);

    let mut ranges = Vec::with_capacity(edges.len() - 1);
    for w in edges.windows(2) {
        let lo = (w[0] / bin_hz).ceil() as usize;
        // Final band includes the Nyquist bin itself.
        let hi = if w[1] >= nyquist {
            bins
        } else {
            ((w[1] / bin_hz).ceil() as usize).min(bins)
        };
        if lo >= hi {
            return Err(Error::InvalidConfig(format!(
                "contrast band {:.0}–{:.0} Hz covers no FFT bin",
                w[0], w[1]
            )));
        }
        ranges.push((lo, hi));
    }
    Ok(ranges)
}

/// Spectral contrast, shape (contrast_bands + 1, frames).
///
/// Per frame and band: sort the floored bin log-energies
/// `10·log10(max(|S|², log_floor))`; the contrast is the mean of the top
/// `contrast_quantile` fraction minus the mean of the bottom fraction
/// (at least one bin each).
pub fn spectral_contrast(
    power: &Array2<f32>,
    cfg: &SpectralConfig,
    sample_rate: u32,
) -> Result<Array2<f32>> {
    let ranges = contrast_band_ranges(cfg, sample_rate)?;
    spectral_contrast_with_ranges(power, cfg, &ranges)
}

/// [`spectral_contrast`] with precomputed band ranges (hot path).
pub fn spectral_contrast_with_ranges(
    power: &Array2<f32>,
    cfg: &SpectralConfig,
    ranges: &[(usize, usize)],
) -> Result<Array2<f32>> {
    let frames = power.ncols();
    let floor = cfg.log_floor as f32;
    let mut out = Array2::<f32>::zeros((ranges.len(), frames));
    let mut scratch: Vec<f32> = Vec::new();

    for (b, &(lo, hi)) in ranges.iter().enumerate() {
        if hi > power.nrows() {
            return Err(Error::ShapeMismatch {
                context: "spectral_contrast band range".into(),
                expected: format!("≤ {} bins", power.nrows()),
                actual: format!("{hi}"),
            });
        }
        let width = hi - lo;
        let k = ((cfg.contrast_quantile * width as f64).floor() as usize).max(1);
        for t in 0..frames {
            scratch.clear();
            scratch.extend((lo..hi).map(|j| 10.0 * power[[j, t]].max(floor).log10()));
            scratch.sort_by(f32::total_cmp);
            let bottom: f32 = scratch[..k].iter().sum::<f32>() / k as f32;
            let top: f32 = scratch[width - k..].iter().sum::<f32>() / k as f32;
            out[[b, t]] = top - bottom;
        }
    }
    Ok(out)
}

/// Per-frame spectral energy envelope: `10·log10(max(Σ_bins |S|², floor))`,
/// shape (1, frames).
pub fn spectral_envelope(power: &Array2<f32>, cfg: &SpectralConfig) -> Array2<f32> {
    let frames = power.ncols();
    let mut out = Array2::<f32>::zeros((1, frames));
    for t in 0..frames {
        let total: f64 = power.column(t).iter().map(|&v| f64::from(v)).sum();
        out[[0, t]] = 10.0 * (total.max(cfg.log_floor) as f32).log10();
    }
    out
}
