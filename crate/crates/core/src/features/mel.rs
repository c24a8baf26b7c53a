//! Mel filterbank and log-mel spectrogram.

use ndarray::Array2;

use crate::error::{Error, Result};

use super::SpectralConfig;

/// Mel scale: `m(f) = 2595·log10(1 + f/700)`.
pub fn hz_to_mel(f: f64) -> f64 {
    2595.0 * (1.0 + f / 700.0).log10()
}

/// Inverse mel scale.
pub fn mel_to_hz(m: f64) -> f64 {
    700.0 * (10f64.powf(m / 2595.0) - 1.0)
}

/// Build the triangular mel filterbank, shape (mel_bands, fft_size/2 + 1).
///
/// Filter centers are equally spaced on the mel scale between `mel_fmin`
/// and `mel_fmax`; each filter is evaluated at the FFT bin frequencies and
/// peak-normalized to 1.
pub fn mel_filterbank(cfg: &SpectralConfig, sample_rate: u32) -> Result<Array2<f32>> {
    let bins = cfg.fft_size / 2 + 1;
    let n_mels = cfg.mel_bands;
    if cfg.mel_fmax > f64::from(sample_rate) / 2.0 {
        return Err(Error::InvalidConfig(format!(
            "mel_fmax {} exceeds Nyquist for rate {}",
            cfg.mel_fmax, sample_rate
        )));
    }

    let m_lo = hz_to_mel(cfg.mel_fmin);
    let m_hi = hz_to_mel(cfg.mel_fmax);
    let edges: Vec<f64> = (0..n_mels + 2)
        .map(|k| mel_to_hz(m_lo + (m_hi - m_lo) * k as f64 / (n_mels + 1) as f64))
        .collect();

    let mut fb = Array2::<f32>::zeros((n_mels, bins));
    for i in 0..n_mels {
        let (lo, center, hi) = (edges[i], edges[i + 1], edges[i + 2]);
        let mut peak = 0.0f64;
        let mut row = vec![0.0f64; bins];
        for (j, r) in row.iter_mut().enumerate() {
            let f = j as f64 * f64::from(sample_rate) / cfg.fft_size as f64;
            let w = if f <= lo || f >= hi {
                0.0
            } else if f <= center {
                (f - lo) / (center - lo)
            } else {
                (hi - f) / (hi - center)
            };
            *r = w;
            peak = peak.max(w);
        }
        if peak <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "mel filter {i} covers no FFT bin (band {lo:.1}–{hi:.1} Hz too narrow)"
            )));
        }
        for (j, &w) in row.iter().enumerate() {
            fb[[i, j]] = (w / peak) as f32;
        }
    }
    Ok(fb)
}

/// Log-mel spectrogram: `10·log10(max(fb · |S|², log_floor))`,
/// shape (mel_bands, frames).
pub fn log_mel(power: &Array2<f32>, fb: &Array2<f32>, cfg: &SpectralConfig) -> Result<Array2<f32>> {
    if fb.ncols() != power.nrows() {
        return Err(Error::ShapeMismatch {
            context: "log_mel filterbank vs spectrogram".into(),
            expected: format!("fb cols = {}", power.nrows()),
            actual: format!("{}", fb.ncols()),
        });
    }
    let floor = cfg.log_floor as f32;
    let mut mel = fb.dot(power);
    mel.mapv_inplace(|v| 10.0 * v.max(floor).log10());
    Ok(mel)
}
