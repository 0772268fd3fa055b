use std::path::Path;

use log::info;
use rand::seq::SliceRandom;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::loss::{loss_and_gradients, LossValue};
use super::network::{forward, predict, ModelConfig, ModelParams, Prediction, DOWNSAMPLE};
use super::optim::{adam_step, AdamState};
use crate::error::{Error, Result};
use crate::geometry::{read_mask, IrisGeometry, OcclusionMask};
use crate::image::{read_image, GrayImage, RealGrid};
use crate::manifest::{resolve, SampleRecord};

/// Optimisation hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub lambda0: f64,
    pub lambda_halving_period: usize,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_epsilon: f64,
    pub lr0: f64,
    pub lr_halvings: u32,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lambda0: 0.8,
            lambda_halving_period: 50,
            adam_beta1: 0.9,
            adam_beta2: 0.99,
            adam_epsilon: 1e-8,
            lr0: 4e-4,
            lr_halvings: 4,
            epochs: 100,
            batch_size: 8,
            seed: 7,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let open_unit = |v: f64| v > 0.0 && v < 1.0;
        let problem = if !open_unit(self.lambda0) {
            Some("lambda0 must lie in (0, 1)")
        } else if !open_unit(self.adam_beta1) || !open_unit(self.adam_beta2) {
            Some("adam betas must lie in (0, 1)")
        } else if !(self.lr0 > 0.0 && self.lr0.is_finite()) {
            Some("lr0 must be positive")
        } else if self.adam_epsilon.is_nan() || self.adam_epsilon <= 0.0 {
            Some("adam_epsilon must be positive")
        } else if self.lambda_halving_period == 0 {
            Some("lambda_halving_period must be positive")
        } else if self.epochs == 0 {
            Some("epochs must be positive")
        } else if self.batch_size == 0 {
            Some("batch_size must be positive")
        } else {
            None
        };
        match problem {
            Some(p) => Err(Error::Config(p.into())),
            None => Ok(()),
        }
    }
}

/// Mask-loss weight at `epoch`: halved every `lambda_halving_period` epochs.
pub fn anneal_lambda(epoch: usize, config: &TrainConfig) -> f64 {
    let halvings = (epoch / config.lambda_halving_period).min(1000) as i32;
    config.lambda0 * 0.5f64.powi(halvings)
}

/// Learning rate at `epoch`: `lr_halvings` evenly spaced halvings across
/// `config.epochs`.
pub fn lr_schedule(epoch: usize, config: &TrainConfig) -> f64 {
    let k = config.lr_halvings as usize;
    let halvings = (epoch * (k + 1) / config.epochs.max(1)).min(k) as i32;
    config.lr0 * 0.5f64.powi(halvings)
}

/// One image with its supervision targets.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSample {
    pub image: GrayImage,
    pub dfs_target: f64,
    /// Binary iris mask at 1/4 resolution.
    pub mask_target: RealGrid,
}

/// Usable-iris mask downsampled by area majority: a cell is 1 when at least
/// half of its pixels lie in the annulus and are usable.
pub fn mask_target(geometry: &IrisGeometry, mask: &OcclusionMask) -> Result<RealGrid> {
    let (w, h) = (mask.width(), mask.height());
    if w % DOWNSAMPLE != 0 || h % DOWNSAMPLE != 0 {
        return Err(Error::DimensionMismatch(format!(
            "mask {w}x{h} is not divisible by {DOWNSAMPLE}"
        )));
    }
    let (cw, ch) = (w / DOWNSAMPLE, h / DOWNSAMPLE);
    let half = DOWNSAMPLE * DOWNSAMPLE / 2;
    let mut cells = Vec::with_capacity(cw * ch);
    for cy in 0..ch {
        for cx in 0..cw {
            let mut count = 0;
            for y in cy * DOWNSAMPLE..(cy + 1) * DOWNSAMPLE {
                for x in cx * DOWNSAMPLE..(cx + 1) * DOWNSAMPLE {
                    if mask.get(x, y) && geometry.in_annulus(x, y) {
                        count += 1;
                    }
                }
            }
            cells.push(if count >= half { 1.0 } else { 0.0 });
        }
    }
    RealGrid::new(cw, ch, cells)
}

/// Loads the image, mask and label of each record.
pub fn load_training_samples(
    records: &[SampleRecord],
    manifest_path: &Path,
) -> Result<Vec<TrainingSample>> {
    records
        .iter()
        .map(|r| {
            let dfs_target = r
                .dfs_label
                .ok_or_else(|| Error::MissingValue(format!("{} has no dfs_label", r.sample_id)))?;
            let image = read_image(resolve(manifest_path, &r.image_path))?;
            let mask = read_mask(resolve(manifest_path, &r.occlusion_path))?;
            if (mask.width(), mask.height()) != (image.width(), image.height()) {
                return Err(Error::DimensionMismatch(format!(
                    "{}: mask and image sizes differ",
                    r.sample_id
                )));
            }
            Ok(TrainingSample {
                image,
                dfs_target,
                mask_target: mask_target(&r.geometry, &mask)?,
            })
        })
        .collect()
}

/// Mean losses over one epoch, measured as each batch was processed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub lambda: f64,
    pub lr: f64,
    pub loss: f64,
    pub mask_loss: f64,
    pub dfs_loss: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub params: ModelParams,
    pub log: Vec<EpochLog>,
}

fn logit(p: f64) -> f64 {
    let p = p.clamp(1e-6, 1.0 - 1e-6);
    (p / (1.0 - p)).ln()
}

/// Trains a freshly initialised model. The regression bias starts at the
/// logit of the mean quality target.
pub fn train(
    samples: &[TrainingSample],
    model: ModelConfig,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    config.validate()?;
    if samples.is_empty() {
        return Err(Error::InsufficientData("empty training set".into()));
    }
    for s in samples {
        if !(0.0..=1.0).contains(&s.dfs_target) {
            return Err(Error::Config(format!(
                "quality target {} outside [0, 1]",
                s.dfs_target
            )));
        }
    }
    let mut params = ModelParams::init(model, config.seed)?;
    let mean_target = samples.iter().map(|s| s.dfs_target).sum::<f64>() / samples.len() as f64;
    params.set_regression_bias(logit(mean_target));

    let mut state = AdamState::new(params.len());
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(1);
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut grad = vec![0.0; params.len()];
    let mut log = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        let lambda = anneal_lambda(epoch, config);
        let lr = lr_schedule(epoch, config);
        order.shuffle(&mut rng);
        let mut sum = LossValue {
            total: 0.0,
            mask: 0.0,
            dfs: 0.0,
        };
        for batch in order.chunks(config.batch_size) {
            // per-sample gradients, reduced in batch order
            let per_sample: Vec<(LossValue, Vec<f64>)> = batch
                .par_iter()
                .map(|&i| {
                    let s = &samples[i];
                    let cache = forward(&params, &s.image)?;
                    let mut g = vec![0.0; params.len()];
                    let l = loss_and_gradients(
                        &params,
                        &cache,
                        s.dfs_target,
                        &s.mask_target,
                        lambda,
                        &mut g,
                    )?;
                    Ok((l, g))
                })
                .collect::<Result<_>>()?;
            grad.iter_mut().for_each(|g| *g = 0.0);
            for (l, g) in &per_sample {
                for (acc, v) in grad.iter_mut().zip(g) {
                    *acc += v;
                }
                sum.total += l.total;
                sum.mask += l.mask;
                sum.dfs += l.dfs;
            }
            let scale = 1.0 / batch.len() as f64;
            grad.iter_mut().for_each(|g| *g *= scale);
            adam_step(&mut params.values, &grad, &mut state, lr, config)?;
        }
        let n = samples.len() as f64;
        let entry = EpochLog {
            epoch,
            lambda,
            lr,
            loss: sum.total / n,
            mask_loss: sum.mask / n,
            dfs_loss: sum.dfs / n,
        };
        if !entry.loss.is_finite() {
            return Err(Error::NonFinite(format!("training loss at epoch {epoch}")));
        }
        info!(
            "epoch {epoch}: loss {:.6} (mask {:.6}, dfs {:.6}) lambda {lambda} lr {lr:e}",
            entry.loss, entry.mask_loss, entry.dfs_loss
        );
        log.push(entry);
    }
    Ok(TrainOutcome { params, log })
}

/// Predicts one record's image and stores the quality in the record.
pub fn predict_record(
    params: &ModelParams,
    record: &mut SampleRecord,
    manifest_path: &Path,
) -> Result<Prediction> {
    let image = read_image(resolve(manifest_path, &record.image_path))?;
    let pred = predict(params, &image)?;
    record.predicted_quality = Some(pred.quality);
    Ok(pred)
}
