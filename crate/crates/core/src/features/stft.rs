//! Short-time Fourier transform with centered frames and reflection padding.

use ndarray::Array2;
use rustfft::num_complex::Complex32;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

use crate::error::{Error, Result};

use super::SpectralConfig;

/// Complex spectrogram, shape (fft_size/2 + 1, frames).
pub type Spectrogram = Array2<Complex32>;

/// Periodic Hann window of length `n`.
pub fn hann_window(n: usize) -> Vec<f32> {
    (0..n)
        .map(|i| {
            let ph = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
            (0.5 * (1.0 - ph.cos())) as f32
        })
        .collect()
}

/// Number of centered frames an `n`-sample signal yields: `n / hop + 1`.
pub fn frame_count(n: usize, hop: usize) -> usize {
    n / hop + 1
}

/// Reflect an out-of-range index back into `[0, n)` (no edge duplication).
fn reflect(mut i: i64, n: i64) -> usize {
    loop {
        if i < 0 {
            i = -i;
        } else if i >= n {
            i = 2 * (n - 1) - i;
        } else {
            return i as usize;
        }
    }
}

/// Compute the STFT of `samples`.
///
/// Frame `t` is the `fft_size`-sample slice centered at `t·hop` (edges
/// reflection-padded), multiplied by a periodic Hann window of `win_len`
/// samples centered in the frame, then transformed; only the `fft_size/2+1`
/// non-redundant bins are kept. Column count is `len/hop + 1`.
pub fn stft(samples: &[f32], cfg: &SpectralConfig) -> Result<Spectrogram> {
    let plan = FftPlanner::new().plan_fft_forward(cfg.fft_size);
    stft_with_plan(samples, cfg, &plan)
}

/// [`stft`] with a caller-provided FFT plan (lets batch extraction reuse one
/// plan across utterances and threads).
pub fn stft_with_plan(
    samples: &[f32],
    cfg: &SpectralConfig,
    plan: &Arc<dyn Fft<f32>>,
) -> Result<Spectrogram> {
    let n = samples.len();
    let fft = cfg.fft_size;
    let bins = fft / 2 + 1;
    if n < bins {
        return Err(Error::WrongLength {
            context: "stft input too short for reflection padding".into(),
            expected: bins,
            actual: n,
        });
    }
    if plan.len() != fft {
        return Err(Error::ShapeMismatch {
            context: "stft FFT plan".into(),
            expected: format!("{fft}"),
            actual: format!("{}", plan.len()),
        });
    }

    let frames = frame_count(n, cfg.hop);
    let window = hann_window(cfg.win_len);
    let offset = (fft - cfg.win_len) / 2;

    let mut out = Array2::<Complex32>::zeros((bins, frames));
    let mut buf = vec![Complex32::new(0.0, 0.0); fft];
    let mut scratch = vec![Complex32::new(0.0, 0.0); plan.get_inplace_scratch_len()];

    for t in 0..frames {
        let start = (t * cfg.hop) as i64 - (fft / 2) as i64;
        for (k, b) in buf.iter_mut().enumerate() {
            let w = if k >= offset && k < offset + cfg.win_len {
                window[k - offset]
            } else {
                0.0
            };
            *b = if w == 0.0 {
                Complex32::new(0.0, 0.0)
            } else {
                let s = samples[reflect(start + k as i64, n as i64)];
                Complex32::new(s * w, 0.0)
            };
        }
        plan.process_with_scratch(&mut buf, &mut scratch);
        for (j, &v) in buf[..bins].iter().enumerate() {
            out[[j, t]] = v;
        }
    }

    Ok(out)
}

/// Power spectrogram |S|², same shape as the input.
pub fn power_spectrogram(spec: &Spectrogram) -> Array2<f32> {
    spec.mapv(|c| c.norm_sqr())
}
