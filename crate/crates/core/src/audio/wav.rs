//! WAV decode/encode: RIFF little-endian, 16-bit PCM or 32-bit IEEE float.

use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};

use crate::error::{Error, Result};

use super::AudioClip;

/// Read a WAV file into a mono clip.
///
/// Multi-channel files are downmixed by averaging; 16-bit integer samples
/// are scaled by 1/32768 into `[-1, 1)`. Anything other than PCM16 or
/// float32 is rejected as [`Error::UnsupportedEncoding`].
pub fn read_wav(path: &Path) -> Result<AudioClip> {
    let reader = WavReader::open(path).map_err(|e| wrap_hound(path, e))?;
    let spec = reader.spec();
    if spec.channels == 0 {
        return Err(Error::UnreadableFile {
            path: path.into(),
            reason: "zero channels declared".into(),
        });
    }
    let channels = spec.channels as usize;

    let interleaved: Vec<f32> = match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Int, 16) => reader
            .into_samples::<i16>()
            .map(|s| s.map(|v| f32::from(v) / 32768.0))
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| wrap_hound(path, e))?,
        (SampleFormat::Float, 32) => reader
            .into_samples::<f32>()
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| wrap_hound(path, e))?,
        (fmt, bits) => {
            return Err(Error::UnsupportedEncoding {
                path: path.into(),
                detail: format!(
                    "{fmt:?} {bits}-bit; only 16-bit PCM and 32-bit float are supported"
                ),
            })
        }
    };

    if interleaved.is_empty() {
        return Err(Error::EmptyAudio {
            context: path.display().to_string(),
        });
    }

    let frames = interleaved.len() / channels;
    let mut samples = Vec::with_capacity(frames);
    for frame in interleaved.chunks_exact(channels) {
        let sum: f32 = frame.iter().sum();
        samples.push(sum / channels as f32);
    }

    if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
        return Err(Error::UnreadableFile {
            path: path.into(),
            reason: format!("non-finite sample at frame {i}"),
        });
    }

    Ok(AudioClip {
        samples,
        sample_rate: spec.sample_rate,
    })
}

/// Write a mono clip as 16-bit PCM.
///
/// Samples are clamped to `[-1, 1]` and quantized with round-to-nearest;
/// the mapping is deterministic, so identical input always produces
/// byte-identical files.
pub fn write_wav_pcm16(path: &Path, samples: &[f32], sample_rate: u32) -> Result<()> {
    let spec = WavSpec {
        channels: 1,
        sample_rate,
        bits_per_sample: 16,
        sample_format: SampleFormat::Int,
    };
    let mut writer = WavWriter::create(path, spec).map_err(|e| wrap_hound(path, e))?;
    for &s in samples {
        let q = (s.clamp(-1.0, 1.0) * 32767.0).round() as i16;
        writer.write_sample(q).map_err(|e| wrap_hound(path, e))?;
    }
    writer.finalize().map_err(|e| wrap_hound(path, e))?;
    Ok(())
}

fn wrap_hound(path: &Path, e: hound::Error) -> Error {
    match e {
        hound::Error::IoError(io) => Error::io(path, io),
        hound::Error::Unsupported => Error::UnsupportedEncoding {
            path: path.into(),
            detail: "unsupported WAV feature".into(),
        },
        other => Error::UnreadableFile {
            path: path.into(),
            reason: other.to_string(),
        },
    }
}
