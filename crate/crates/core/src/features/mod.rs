//! Fused spectral features: log-mel (40 rows) + spectral contrast (7 rows)
//! + spectral energy envelope (1 row) = the 48×501 feature map consumed by
//! the embedder.

pub mod contrast;
pub mod mel;
pub mod stft;

pub use contrast::{contrast_band_ranges, spectral_contrast, spectral_envelope};
pub use mel::{hz_to_mel, log_mel, mel_filterbank, mel_to_hz};
pub use stft::{frame_count, power_spectrogram, stft, Spectrogram};

use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

use ndarray::Array2;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::audio::{AudioClip, PrepConfig};
use crate::error::{Error, Result};

/// Feature rows in the fused map: 40 mel + (6+1) contrast + 1 envelope.
pub const FEATURE_ROWS: usize = 48;
/// Time frames produced from the fixed 80,000-sample clip at hop 160.
pub const FEATURE_COLS: usize = 501;

/// Magic bytes of the on-disk feature cache format.
pub const QSFM_MAGIC: &[u8; 4] = b"QSFM";
/// Current feature cache format version.
pub const QSFM_VERSION: u32 = 1;

/// Spectral analysis parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SpectralConfig {
    /// FFT length in samples.
    pub fft_size: usize,
    /// Hop between frame centers in samples.
    pub hop: usize,
    /// Hann window length in samples (centered inside the FFT frame).
    pub win_len: usize,
    /// Number of mel filterbank rows.
    pub mel_bands: usize,
    /// Lower mel filterbank edge in Hz.
    pub mel_fmin: f64,
    /// Upper mel filterbank edge in Hz.
    pub mel_fmax: f64,
    /// Number of octave sub-band splits for spectral contrast
    /// (rows produced: `contrast_bands + 1`).
    pub contrast_bands: usize,
    /// First octave edge in Hz.
    pub contrast_fmin: f64,
    /// Fraction of bins in the peak/valley means.
    pub contrast_quantile: f64,
    /// Rows of the spectral envelope feature.
    pub envelope_rows: usize,
    /// Power floor applied before every log.
    pub log_floor: f64,
}

impl Default for SpectralConfig {
    fn default() -> Self {
        SpectralConfig {
            fft_size: 512,
            hop: 160,
            win_len: 400,
            mel_bands: 40,
            mel_fmin: 0.0,
            mel_fmax: 8000.0,
            contrast_bands: 6,
            contrast_fmin: 200.0,
            contrast_quantile: 0.02,
            envelope_rows: 1,
            log_floor: 1e-10,
        }
    }
}

impl SpectralConfig {
    /// Total feature rows this configuration produces.
    pub fn rows(&self) -> usize {
        self.mel_bands + self.contrast_bands + 1 + self.envelope_rows
    }

    /// Check internal invariants and compatibility with the preprocessing
    /// configuration (fixed clip length must yield exactly
    /// [`FEATURE_COLS`] frames; row budget must be [`FEATURE_ROWS`]).
    pub fn validate(&self, prep: &PrepConfig) -> Result<()> {
        if self.fft_size == 0 || self.hop == 0 || self.win_len == 0 {
            return Err(Error::InvalidConfig(
                "fft_size, hop, and win_len must be positive".into(),
            ));
        }
        if self.win_len > self.fft_size {
            return Err(Error::InvalidConfig(format!(
                "win_len {} exceeds fft_size {}",
                self.win_len, self.fft_size
            )));
        }
        if self.rows() != FEATURE_ROWS {
            return Err(Error::InvalidConfig(format!(
                "feature rows {} ≠ {FEATURE_ROWS} (mel {} + contrast {}+1 + envelope {})",
                self.rows(),
                self.mel_bands,
                self.contrast_bands,
                self.envelope_rows
            )));
        }
        if self.envelope_rows != 1 {
            return Err(Error::InvalidConfig(
                "envelope_rows must be 1 (per-frame total energy)".into(),
            ));
        }
        if !(self.contrast_quantile > 0.0 && self.contrast_quantile <= 0.5) {
            return Err(Error::InvalidConfig(format!(
                "contrast_quantile must be in (0, 0.5], got {}",
                self.contrast_quantile
            )));
        }
        if self.log_floor <= 0.0 {
            return Err(Error::InvalidConfig("log_floor must be > 0".into()));
        }
        if !(self.mel_fmin >= 0.0 && self.mel_fmin < self.mel_fmax) {
            return Err(Error::InvalidConfig(format!(
                "need 0 ≤ mel_fmin < mel_fmax, got {}..{}",
                self.mel_fmin, self.mel_fmax
            )));
        }
        if self.mel_fmax > f64::from(prep.target_rate) / 2.0 {
            return Err(Error::InvalidConfig(format!(
                "mel_fmax {} exceeds Nyquist for rate {}",
                self.mel_fmax, prep.target_rate
            )));
        }
        let frames = frame_count(prep.target_len(), self.hop);
        if frames != FEATURE_COLS {
            return Err(Error::InvalidConfig(format!(
                "prep/spectral mismatch: {} samples at hop {} give {frames} frames, need {FEATURE_COLS}",
                prep.target_len(),
                self.hop
            )));
        }
        // Filterbank and band construction have their own coverage errors;
        // building them here surfaces bad geometry at config time.
        mel_filterbank(self, prep.target_rate)?;
        contrast_band_ranges(self, prep.target_rate)?;
        Ok(())
    }
}

/// The fused, standardized 48×501 feature matrix for one utterance.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    /// Rows 0–39: log-mel; 40–46: spectral contrast; 47: envelope.
    pub values: Array2<f32>,
    /// Source utterance id.
    pub utt_id: String,
}

impl FeatureMap {
    /// Validate shape and finiteness.
    pub fn new(values: Array2<f32>, utt_id: impl Into<String>) -> Result<Self> {
        if values.dim() != (FEATURE_ROWS, FEATURE_COLS) {
            return Err(Error::ShapeMismatch {
                context: "FeatureMap".into(),
                expected: format!("{FEATURE_ROWS}×{FEATURE_COLS}"),
                actual: format!("{}×{}", values.nrows(), values.ncols()),
            });
        }
        if let Some(((r, c), v)) = values.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "non-finite feature value {v} at ({r}, {c})"
            )));
        }
        Ok(FeatureMap {
            values,
            utt_id: utt_id.into(),
        })
    }
}

/// Per-row standardization statistics (training-corpus mean and stddev).
///
/// Stored in f64: feature values are dB-scaled (magnitudes up to ~100), so
/// f32 means would quantize at ~1e-5 and visibly bias the standardized rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    /// Per-row mean over all training frames.
    pub mean: Vec<f64>,
    /// Per-row standard deviation over all training frames.
    pub std: Vec<f64>,
}

/// Stddev floor applied during standardization.
pub const STD_FLOOR: f64 = 1e-8;

impl NormStats {
    /// Accumulate statistics over raw (pre-standardization) feature maps.
    pub fn from_raw_maps<'a, I>(maps: I) -> Result<NormStats>
    where
        I: IntoIterator<Item = &'a Array2<f32>>,
    {
        let mut sums: Vec<f64> = Vec::new();
        let mut sumsq: Vec<f64> = Vec::new();
        let mut count = 0u64;
        for m in maps {
            if sums.is_empty() {
                sums = vec![0.0; m.nrows()];
                sumsq = vec![0.0; m.nrows()];
            } else if sums.len() != m.nrows() {
                return Err(Error::ShapeMismatch {
                    context: "NormStats accumulation".into(),
                    expected: format!("{} rows", sums.len()),
                    actual: format!("{} rows", m.nrows()),
                });
            }
            for (r, row) in m.rows().into_iter().enumerate() {
                for &v in row {
                    sums[r] += f64::from(v);
                    sumsq[r] += f64::from(v) * f64::from(v);
                }
            }
            count += m.ncols() as u64;
        }
        if count == 0 {
            return Err(Error::EmptyRecords {
                context: "NormStats needs at least one feature map".into(),
            });
        }
        let n = count as f64;
        let mean: Vec<f64> = sums.iter().map(|&s| s / n).collect();
        let std: Vec<f64> = sums
            .iter()
            .zip(&sumsq)
            .map(|(&s, &sq)| {
                let mu = s / n;
                (sq / n - mu * mu).max(0.0).sqrt()
            })
            .collect();
        Ok(NormStats { mean, std })
    }

    /// Per-row statistics of a single raw map (the stats-absent fallback).
    pub fn from_single_map(raw: &Array2<f32>) -> NormStats {
        NormStats::from_raw_maps(std::iter::once(raw)).expect("non-empty map")
    }
}

/// Row-stack [mel; contrast; envelope] into one raw (unstandardized) matrix.
pub fn stack_features(
    mel: &Array2<f32>,
    contrast: &Array2<f32>,
    env: &Array2<f32>,
) -> Result<Array2<f32>> {
    let cols = mel.ncols();
    if contrast.ncols() != cols || env.ncols() != cols {
        return Err(Error::ShapeMismatch {
            context: "stack_features column counts".into(),
            expected: format!("{cols}"),
            actual: format!("{} / {}", contrast.ncols(), env.ncols()),
        });
    }
    let rows = mel.nrows() + contrast.nrows() + env.nrows();
    let mut out = Array2::<f32>::zeros((rows, cols));
    out.slice_mut(ndarray::s![..mel.nrows(), ..]).assign(mel);
    out.slice_mut(ndarray::s![mel.nrows()..mel.nrows() + contrast.nrows(), ..])
        .assign(contrast);
    out.slice_mut(ndarray::s![mel.nrows() + contrast.nrows().., ..])
        .assign(env);
    Ok(out)
}

/// Standardize each row: `(x − μ_row) / max(σ_row, STD_FLOOR)`.
///
/// With `stats` present, training-corpus statistics are used (query-time
/// consistency); otherwise per-utterance statistics.
pub fn standardize(raw: &Array2<f32>, stats: Option<&NormStats>) -> Result<Array2<f32>> {
    let own;
    let stats = match stats {
        Some(s) => s,
        None => {
            own = NormStats::from_single_map(raw);
            &own
        }
    };
    if stats.mean.len() != raw.nrows() || stats.std.len() != raw.nrows() {
        return Err(Error::ShapeMismatch {
            context: "standardize stats".into(),
            expected: format!("{} rows", raw.nrows()),
            actual: format!("{} / {}", stats.mean.len(), stats.std.len()),
        });
    }
    let mut out = raw.clone();
    for (r, mut row) in out.rows_mut().into_iter().enumerate() {
        let mu = stats.mean[r];
        let sigma = stats.std[r].max(STD_FLOOR);
        row.mapv_inplace(|v| ((f64::from(v) - mu) / sigma) as f32);
    }
    Ok(out)
}

/// Fuse the three feature blocks into a standardized [`FeatureMap`].
pub fn fuse_features(
    mel: &Array2<f32>,
    contrast: &Array2<f32>,
    env: &Array2<f32>,
    stats: Option<&NormStats>,
    utt_id: impl Into<String>,
) -> Result<FeatureMap> {
    let raw = stack_features(mel, contrast, env)?;
    FeatureMap::new(standardize(&raw, stats)?, utt_id)
}

/// Reusable extractor: precomputed window/filterbank/band tables plus a
/// shared FFT plan. Immutable after construction, safe to share across
/// threads.
pub struct FeatureExtractor {
    spectral: SpectralConfig,
    sample_rate: u32,
    expected_len: usize,
    filterbank: Array2<f32>,
    band_ranges: Vec<(usize, usize)>,
    fft: Arc<dyn Fft<f32>>,
}

impl FeatureExtractor {
    /// Build the extractor for a validated (prep, spectral) pair.
    pub fn new(prep: &PrepConfig, spectral: &SpectralConfig) -> Result<Self> {
        spectral.validate(prep)?;
        Ok(FeatureExtractor {
            spectral: spectral.clone(),
            sample_rate: prep.target_rate,
            expected_len: prep.target_len(),
            filterbank: mel_filterbank(spectral, prep.target_rate)?,
            band_ranges: contrast_band_ranges(spectral, prep.target_rate)?,
            fft: FftPlanner::new().plan_fft_forward(spectral.fft_size),
        })
    }

    /// Raw (unstandardized) 48×501 feature stack of a preprocessed clip.
    pub fn extract_raw(&self, clip: &AudioClip) -> Result<Array2<f32>> {
        if clip.samples.len() != self.expected_len {
            return Err(Error::WrongLength {
                context: "feature extraction input".into(),
                expected: self.expected_len,
                actual: clip.samples.len(),
            });
        }
        if clip.sample_rate != self.sample_rate {
            return Err(Error::InvalidConfig(format!(
                "clip rate {} ≠ configured rate {}",
                clip.sample_rate, self.sample_rate
            )));
        }
        let spec = stft::stft_with_plan(&clip.samples, &self.spectral, &self.fft)?;
        let power = power_spectrogram(&spec);
        let mel = log_mel(&power, &self.filterbank, &self.spectral)?;
        let con =
            contrast::spectral_contrast_with_ranges(&power, &self.spectral, &self.band_ranges)?;
        let env = spectral_envelope(&power, &self.spectral);
        stack_features(&mel, &con, &env)
    }

    /// Full extraction: raw stack standardized into a [`FeatureMap`].
    pub fn extract(
        &self,
        clip: &AudioClip,
        stats: Option<&NormStats>,
        utt_id: impl Into<String>,
    ) -> Result<FeatureMap> {
        let raw = self.extract_raw(clip)?;
        FeatureMap::new(standardize(&raw, stats)?, utt_id)
    }
}

/// Write a raw feature matrix to the binary cache format:
/// magic `QSFM`, version u32 LE, rows u32 LE, cols u32 LE, then row-major
/// f32 LE values.
pub fn write_feature_cache(path: &Path, values: &Array2<f32>) -> Result<()> {
    let mut buf =
        Vec::with_capacity(16 + values.len() * std::mem::size_of::<f32>());
    buf.extend_from_slice(QSFM_MAGIC);
    buf.extend_from_slice(&QSFM_VERSION.to_le_bytes());
    buf.extend_from_slice(&(values.nrows() as u32).to_le_bytes());
    buf.extend_from_slice(&(values.ncols() as u32).to_le_bytes());
    for &v in values.iter() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&buf).map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Read a feature matrix back from the binary cache format.
pub fn read_feature_cache(path: &Path) -> Result<Array2<f32>> {
    let mut f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut header = [0u8; 16];
    f.read_exact(&mut header).map_err(|e| Error::io(path, e))?;
    if &header[..4] != QSFM_MAGIC {
        return Err(Error::UnreadableFile {
            path: path.into(),
            reason: "bad feature cache magic".into(),
        });
    }
    let version = u32::from_le_bytes(header[4..8].try_into().unwrap());
    if version != QSFM_VERSION {
        return Err(Error::UnreadableFile {
            path: path.into(),
            reason: format!("unsupported feature cache version {version}"),
        });
    }
    let rows = u32::from_le_bytes(header[8..12].try_into().unwrap()) as usize;
    let cols = u32::from_le_bytes(header[12..16].try_into().unwrap()) as usize;
    let count = rows
        .checked_mul(cols)
        .filter(|&n| n > 0 && n <= (1 << 28))
        .ok_or_else(|| Error::UnreadableFile {
            path: path.into(),
            reason: format!("implausible dimensions {rows}×{cols}"),
        })?;
    let mut data = vec![0u8; count * 4];
    f.read_exact(&mut data).map_err(|e| Error::io(path, e))?;
    let values: Vec<f32> = data
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
        .collect();
    Array2::from_shape_vec((rows, cols), values).map_err(|_| Error::UnreadableFile {
        path: path.into(),
        reason: "shape/data mismatch".into(),
    })
}
