//! Binary model checkpoints.
//!
//! Layout: magic `QSNM`, format version (u32 LE), header length (u32 LE),
//! UTF-8 JSON header, then raw parameter blobs as little-endian f32 in the
//! exact order the header's tensor table declares. The header carries the
//! architecture, training/preprocessing/feature configs, feature
//! normalization statistics (f64, which JSON round-trips exactly), and the
//! training step count. Saving is byte-deterministic; a load followed by a
//! save reproduces the file bit for bit.

use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::audio::PrepConfig;
use crate::error::{Error, Result};
use crate::features::{NormStats, SpectralConfig};
use crate::features::FeatureMap;
use crate::model::{ArchDims, EmbedderNet, Embedding};
use crate::nn::TrainConfig;

/// File magic.
pub const QSNM_MAGIC: [u8; 4] = *b"QSNM";
/// Current format version.
pub const QSNM_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct TensorDesc {
    name: String,
    shape: Vec<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    arch: ArchDims,
    step: u64,
    train: TrainConfig,
    prep: PrepConfig,
    spectral: SpectralConfig,
    norm_stats: NormStats,
    tensors: Vec<TensorDesc>,
}

/// A trained model plus everything needed to score raw audio with it:
/// preprocessing and feature configs, normalization statistics, and the
/// training hyperparameters it was produced with.
#[derive(Debug, Clone)]
pub struct ModelCheckpoint {
    pub net: EmbedderNet<f32>,
    pub stats: NormStats,
    pub prep: PrepConfig,
    pub spectral: SpectralConfig,
    pub train: TrainConfig,
    pub step: u64,
}

impl ModelCheckpoint {
    /// Tensor table in serialization order: the sixteen trainable
    /// parameters followed by the four batch-norm running-statistic
    /// vectors.
    fn tensor_table(net: &EmbedderNet<f32>) -> Vec<TensorDesc> {
        let mut table: Vec<TensorDesc> = net
            .params()
            .iter()
            .map(|p| TensorDesc {
                name: p.name.clone(),
                shape: p.values.shape().to_vec(),
            })
            .collect();
        for (name, v) in [
            ("bn1.running_mean", &net.bn1.running_mean),
            ("bn1.running_var", &net.bn1.running_var),
            ("bn2.running_mean", &net.bn2.running_mean),
            ("bn2.running_var", &net.bn2.running_var),
        ] {
            table.push(TensorDesc {
                name: name.to_string(),
                shape: vec![v.len()],
            });
        }
        table
    }

    /// Serialize to the binary container. Writing is atomic enough for our
    /// purposes: the full byte buffer is assembled first, then written in
    /// one call.
    pub fn save(&self, path: &Path) -> Result<()> {
        let header = Header {
            arch: self.net.dims.clone(),
            step: self.step,
            train: self.train.clone(),
            prep: self.prep.clone(),
            spectral: self.spectral.clone(),
            norm_stats: self.stats.clone(),
            tensors: Self::tensor_table(&self.net),
        };
        let header_json = serde_json::to_vec(&header).map_err(|e| Error::json("checkpoint header", e))?;

        let blob_len: usize = header.tensors.iter().map(|t| t.shape.iter().product::<usize>()).sum();
        let mut buf = Vec::with_capacity(12 + header_json.len() + 4 * blob_len);
        buf.write_all(&QSNM_MAGIC).expect("vec write");
        buf.write_all(&QSNM_VERSION.to_le_bytes()).expect("vec write");
        buf.write_all(&(header_json.len() as u32).to_le_bytes()).expect("vec write");
        buf.write_all(&header_json).expect("vec write");

        for p in self.net.params() {
            for v in p.values.iter() {
                buf.write_all(&v.to_le_bytes()).expect("vec write");
            }
        }
        for v in [
            &self.net.bn1.running_mean,
            &self.net.bn1.running_var,
            &self.net.bn2.running_mean,
            &self.net.bn2.running_var,
        ] {
            for x in v.iter() {
                buf.write_all(&x.to_le_bytes()).expect("vec write");
            }
        }
        std::fs::write(path, &buf).map_err(|e| Error::io(path, e))
    }

    /// Load and fully validate a checkpoint.
    pub fn load(path: &Path) -> Result<Self> {
        let corrupt = |reason: String| Error::CorruptCheckpoint {
            path: path.to_path_buf(),
            reason,
        };
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        if bytes.len() < 12 {
            return Err(corrupt(format!("file too short ({} bytes)", bytes.len())));
        }
        if bytes[0..4] != QSNM_MAGIC {
            return Err(corrupt(format!(
                "bad magic {:02x?}, expected {:02x?}",
                &bytes[0..4],
                QSNM_MAGIC
            )));
        }
        let version = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes"));
        if version != QSNM_VERSION {
            return Err(corrupt(format!(
                "unsupported version {version}, expected {QSNM_VERSION}"
            )));
        }
        let header_len = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes")) as usize;
        let header_end = 12usize
            .checked_add(header_len)
            .filter(|end| *end <= bytes.len())
            .ok_or_else(|| corrupt("header length exceeds file size".to_string()))?;
        let header: Header = serde_json::from_slice(&bytes[12..header_end])
            .map_err(|e| corrupt(format!("unparseable header: {e}")))?;

        header.arch.validate()?;
        header.train.validate()?;
        let mut net = EmbedderNet::<f32>::zeros(header.arch.clone(), header.train.bn_momentum)?;

        // Expected table from the freshly built net must match the header's
        // declared table exactly (names, order, shapes).
        let expected = Self::tensor_table(&net);
        if expected.len() != header.tensors.len() {
            return Err(corrupt(format!(
                "tensor count {} does not match architecture ({} expected)",
                header.tensors.len(),
                expected.len()
            )));
        }
        for (e, d) in expected.iter().zip(&header.tensors) {
            if e.name != d.name || e.shape != d.shape {
                return Err(corrupt(format!(
                    "tensor {} {:?} does not match architecture ({} {:?} expected)",
                    d.name, d.shape, e.name, e.shape
                )));
            }
        }

        let mut offset = header_end;
        let mut fill = |dst: &mut [f32], name: &str| -> Result<()> {
            let need = dst.len() * 4;
            if offset + need > bytes.len() {
                return Err(corrupt(format!("truncated blob for tensor {name}")));
            }
            for (i, v) in dst.iter_mut().enumerate() {
                let at = offset + 4 * i;
                *v = f32::from_le_bytes(bytes[at..at + 4].try_into().expect("4 bytes"));
                if !v.is_finite() {
                    return Err(corrupt(format!("non-finite value in tensor {name}")));
                }
            }
            offset += need;
            Ok(())
        };
        for p in net.params_mut() {
            let name = p.name.clone();
            fill(p.values.as_slice_mut().expect("params are contiguous"), &name)?;
        }
        fill(net.bn1.running_mean.as_slice_mut().expect("contiguous"), "bn1.running_mean")?;
        fill(net.bn1.running_var.as_slice_mut().expect("contiguous"), "bn1.running_var")?;
        fill(net.bn2.running_mean.as_slice_mut().expect("contiguous"), "bn2.running_mean")?;
        fill(net.bn2.running_var.as_slice_mut().expect("contiguous"), "bn2.running_var")?;
        if offset != bytes.len() {
            return Err(corrupt(format!(
                "{} trailing bytes after parameter blobs",
                bytes.len() - offset
            )));
        }

        if header.norm_stats.mean.len() != header.arch.input_dim
            || header.norm_stats.std.len() != header.arch.input_dim
        {
            return Err(corrupt(format!(
                "normalization statistics length {} does not match input dim {}",
                header.norm_stats.mean.len(),
                header.arch.input_dim
            )));
        }

        Ok(Self {
            net,
            stats: header.norm_stats,
            prep: header.prep,
            spectral: header.spectral,
            train: header.train,
            step: header.step,
        })
    }

    /// Embed a raw (unstandardized) feature map: standardize with the
    /// training statistics stored here, then run the network in eval mode.
    pub fn embed_features(&self, raw: &FeatureMap) -> Result<Embedding> {
        let values = crate::features::standardize(&raw.values, Some(&self.stats))?;
        self.net.embed(&FeatureMap {
            values,
            utt_id: raw.utt_id.clone(),
        })
    }

    /// Batch [`Self::embed_features`], chunked to bound peak memory.
    pub fn embed_features_batch(&self, raw: &[&FeatureMap]) -> Result<Vec<Embedding>> {
        let mut out = Vec::with_capacity(raw.len());
        for chunk in raw.chunks(128) {
            let standardized = chunk
                .iter()
                .map(|m| {
                    Ok(FeatureMap {
                        values: crate::features::standardize(&m.values, Some(&self.stats))?,
                        utt_id: m.utt_id.clone(),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let refs: Vec<&FeatureMap> = standardized.iter().collect();
            out.extend(self.net.embed_batch(&refs)?);
        }
        Ok(out)
    }
}
