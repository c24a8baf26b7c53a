//! Training loop: balanced pool sampling, in-batch triplet mining, and
//! Adam updates with stepped learning-rate decay.
//!
//! Each step draws a class-balanced pool of `batch_size` utterances,
//! embeds it once as a single train-mode batch (updating batch-norm
//! running statistics), mines one triplet per pool element among the
//! batch's candidates, and backpropagates the mean hinge loss. All
//! randomness derives from per-step seeded streams, so a run is a pure
//! function of `(data, config, seed)`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::audio::PrepConfig;
use crate::error::{Error, Result};
use crate::features::{standardize, FeatureMap, NormStats, SpectralConfig};
use crate::model::{ArchDims, EmbedderNet, ModelCheckpoint};
use crate::nn::{effective_lr, triplet_batch_loss, Adam, TrainConfig};
use crate::protocol::{TripletSampler, Utterance};
use crate::seed;

/// One logged training step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainLogRow {
    pub step: u64,
    pub lr: f64,
    pub mean_loss: f64,
    /// Triplets with a non-zero hinge in this batch.
    pub active: usize,
}

/// Owns the model and optimizer state over a training run.
pub struct Trainer {
    net: EmbedderNet<f32>,
    adam: Adam<f32>,
    cfg: TrainConfig,
    seed: u64,
    utterances: Vec<Utterance>,
    /// Standardized feature maps, aligned index-wise with `utterances`.
    maps: Vec<FeatureMap>,
    stats: NormStats,
    step: u64,
    pub log: Vec<TrainLogRow>,
}

impl Trainer {
    /// Build a trainer over the training split. `raw_maps` are
    /// unstandardized feature maps aligned with `train`; normalization
    /// statistics are computed here, over the training corpus only, and
    /// travel with the checkpoint.
    pub fn new(
        train: Vec<Utterance>,
        raw_maps: Vec<FeatureMap>,
        arch: ArchDims,
        cfg: TrainConfig,
        seed: u64,
    ) -> Result<Self> {
        cfg.validate()?;
        arch.validate()?;
        if train.len() != raw_maps.len() {
            return Err(Error::LengthMismatch {
                context: "train utterances vs feature maps".to_string(),
                left: train.len(),
                right: raw_maps.len(),
            });
        }
        for (u, m) in train.iter().zip(&raw_maps) {
            if u.utt_id != m.utt_id {
                return Err(Error::InvalidConfig(format!(
                    "feature maps misaligned with utterances: `{}` paired with `{}`",
                    m.utt_id, u.utt_id
                )));
            }
        }
        let stats = NormStats::from_raw_maps(raw_maps.iter().map(|m| &m.values))?;
        let maps = raw_maps
            .iter()
            .map(|m| {
                Ok(FeatureMap {
                    values: standardize(&m.values, Some(&stats))?,
                    utt_id: m.utt_id.clone(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let mut init_rng = seed::rng(seed, "model-init");
        let net = EmbedderNet::new(arch, cfg.bn_momentum, &mut init_rng)?;
        Ok(Self {
            net,
            adam: Adam::new(),
            cfg,
            seed,
            utterances: train,
            maps,
            stats,
            step: 0,
            log: Vec::new(),
        })
    }

    pub fn steps_done(&self) -> u64 {
        self.step
    }

    pub fn stats(&self) -> &NormStats {
        &self.stats
    }

    /// Run one optimization step and return its log row.
    pub fn step(&mut self) -> Result<TrainLogRow> {
        let step = self.step;
        let mut rng = seed::rng_indexed(self.seed, "train-step", step);
        let sampler = TripletSampler::new(&self.utterances)?;
        let pool = sampler.draw_pool(self.cfg.batch_size, &mut rng);
        let map_refs: Vec<&FeatureMap> = pool.iter().map(|&i| &self.maps[i]).collect();
        let x = self.net.build_input(&map_refs)?;
        let (emb, cache) = self
            .net
            .forward_train(x, self.cfg.dropout_p, true, &mut rng)?;
        let triplets = sampler.mine_pool(
            &pool,
            Some(emb.view()),
            self.cfg.strategy,
            self.cfg.margin_alpha,
            &mut rng,
        )?;
        let batch = triplet_batch_loss(emb.view(), &triplets, self.cfg.margin_alpha)?;
        self.net.backward(cache, batch.d_emb.view())?;
        let mut params = self.net.params_mut();
        self.adam.step(&mut params, step, &self.cfg)?;
        self.net.zero_grads();
        self.step += 1;
        Ok(TrainLogRow {
            step,
            lr: effective_lr(&self.cfg, step),
            mean_loss: batch.mean_loss,
            active: batch.active,
        })
    }

    /// Run the configured number of steps, recording a log row every
    /// `log_every` steps plus the final step.
    pub fn run(&mut self) -> Result<()> {
        while self.step < self.cfg.max_steps {
            let row = self.step()?;
            if row.step % self.cfg.log_every == 0 || row.step + 1 == self.cfg.max_steps {
                self.log.push(row);
            }
        }
        Ok(())
    }

    /// Package the trained model with everything scoring needs.
    pub fn into_checkpoint(self, prep: PrepConfig, spectral: SpectralConfig) -> ModelCheckpoint {
        ModelCheckpoint {
            net: self.net,
            stats: self.stats,
            prep,
            spectral,
            train: self.cfg,
            step: self.step,
        }
    }
}

/// Persist training log rows as CSV (`step,lr,mean_loss,active_triplets`).
pub fn write_train_log_csv(path: &Path, rows: &[TrainLogRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv("training log", e))?;
    w.write_record(["step", "lr", "mean_loss", "active_triplets"])
        .map_err(|e| Error::csv("training log", e))?;
    for r in rows {
        w.write_record([
            r.step.to_string(),
            format!("{:.12}", r.lr),
            format!("{:.12}", r.mean_loss),
            r.active.to_string(),
        ])
        .map_err(|e| Error::csv("training log", e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}
