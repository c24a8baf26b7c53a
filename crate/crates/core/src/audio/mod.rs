//! Audio loading and the five-step preprocessing chain.
//!
//! The pipeline turns an arbitrary WAV file into a fixed-length, normalized
//! waveform ready for feature extraction:
//!
//! 1. voice-activity detection (drop low-energy frames),
//! 2. amplitude normalization (peak to 1.0),
//! 3. band-pass filtering (default 50–7800 Hz),
//! 4. pre-emphasis (`y[n] = x[n] − a·x[n−1]`),
//! 5. length fixing (center-crop or symmetric zero-pad to
//!    `target_duration · target_rate` samples, 80,000 by default).
//!
//! Every stage is a pure function; the whole chain is safe to run
//! concurrently across files.

mod prep;
mod wav;

pub use prep::{
    band_pass, fix_length, pre_emphasis, preprocess, remove_silence, resample,
};
pub use wav::{read_wav, write_wav_pcm16};

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A mono waveform with its sample rate.
///
/// Invariants: `samples` is non-empty after load, all values finite,
/// `sample_rate > 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip {
    /// Amplitude samples, nominal range `[-1, 1]`.
    pub samples: Vec<f32>,
    /// Sampling rate in Hz.
    pub sample_rate: u32,
}

impl AudioClip {
    /// Construct a clip, rejecting empty or non-finite input.
    pub fn new(samples: Vec<f32>, sample_rate: u32) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptyAudio {
                context: "AudioClip::new".into(),
            });
        }
        if sample_rate == 0 {
            return Err(Error::InvalidConfig("sample_rate must be > 0".into()));
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return Err(Error::UnreadableFile {
                path: "<memory>".into(),
                reason: format!("non-finite sample at index {i}"),
            });
        }
        Ok(AudioClip {
            samples,
            sample_rate,
        })
    }

    /// Duration in seconds.
    pub fn duration_secs(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }
}

/// Preprocessing parameters.
///
/// Defaults reconstruct a conventional 16 kHz speech front end; all values
/// are overridable through the run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PrepConfig {
    /// Output sample rate in Hz.
    pub target_rate: u32,
    /// VAD analysis frame length in samples (25 ms at 16 kHz). The VAD scans
    /// disjoint frames of this length; see [`remove_silence`].
    pub frame_len: usize,
    /// Analysis hop in samples (10 ms at 16 kHz). Kept alongside `frame_len`
    /// for overlapped analyses; the silence filter itself works on disjoint
    /// frames so that it stays a strict subsequence filter.
    pub frame_hop: usize,
    /// Energy threshold in dB relative to the clip's peak frame RMS;
    /// frames quieter than this are dropped.
    pub vad_energy_db: f64,
    /// Band-pass lower edge in Hz.
    pub band_low: f64,
    /// Band-pass upper edge in Hz.
    pub band_high: f64,
    /// Pre-emphasis coefficient.
    pub preemph: f32,
    /// Output duration in seconds; output length = round(duration · rate).
    pub target_duration: f64,
}

impl Default for PrepConfig {
    fn default() -> Self {
        PrepConfig {
            target_rate: 16_000,
            frame_len: 400,
            frame_hop: 160,
            vad_energy_db: -40.0,
            band_low: 50.0,
            band_high: 7800.0,
            preemph: 0.97,
            target_duration: 5.0,
        }
    }
}

impl PrepConfig {
    /// Number of samples the pipeline must emit.
    pub fn target_len(&self) -> usize {
        (self.target_duration * self.target_rate as f64).round() as usize
    }

    /// Check the structural invariants.
    pub fn validate(&self) -> Result<()> {
        if self.target_rate == 0 {
            return Err(Error::InvalidConfig("target_rate must be > 0".into()));
        }
        let nyquist = self.target_rate as f64 / 2.0;
        if !(self.band_low > 0.0 && self.band_low < self.band_high && self.band_high < nyquist) {
            return Err(Error::InvalidBand {
                low_hz: self.band_low,
                high_hz: self.band_high,
                sample_rate: self.target_rate,
            });
        }
        if !(0.0..1.0).contains(&self.preemph) {
            return Err(Error::InvalidConfig(format!(
                "preemph must be in [0, 1), got {}",
                self.preemph
            )));
        }
        if self.frame_len == 0 || self.frame_hop == 0 || self.frame_hop > self.frame_len {
            return Err(Error::InvalidConfig(format!(
                "need 0 < frame_hop ({}) ≤ frame_len ({})",
                self.frame_hop, self.frame_len
            )));
        }
        if self.target_duration <= 0.0 || self.target_len() == 0 {
            return Err(Error::InvalidConfig(
                "target_duration must be > 0".into(),
            ));
        }
        Ok(())
    }
}

/// Load a WAV file, downmix to mono, and resample to `cfg.target_rate`.
pub fn load_audio(path: &Path, cfg: &PrepConfig) -> Result<AudioClip> {
    let clip = wav::read_wav(path)?;
    resample(&clip, cfg.target_rate)
}
