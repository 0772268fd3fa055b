//! Composite segmentation + quality regression loss.

use super::network::{backward, ForwardCache, ModelParams, Prediction};
use crate::error::{Error, Result};
use crate::image::RealGrid;

/// Loss value and its two components.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossValue {
    /// `lambda * mask + (1 - lambda) * dfs`
    pub total: f64,
    /// Mean per-cell binary cross-entropy of the heatmap.
    pub mask: f64,
    /// Squared error of the quality output.
    pub dfs: f64,
}

const PROB_FLOOR: f64 = 1e-15;

fn check(heatmap_dims: (usize, usize), mask_target: &RealGrid, lambda: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::Config(format!("lambda = {lambda} outside [0, 1]")));
    }
    if heatmap_dims != (mask_target.width(), mask_target.height()) {
        return Err(Error::DimensionMismatch(format!(
            "heatmap {}x{} vs mask target {}x{}",
            heatmap_dims.0,
            heatmap_dims.1,
            mask_target.width(),
            mask_target.height()
        )));
    }
    Ok(())
}

fn combine(mask: f64, dfs: f64, lambda: f64) -> LossValue {
    LossValue {
        total: lambda * mask + (1.0 - lambda) * dfs,
        mask,
        dfs,
    }
}

/// Loss of a prediction. Heatmap probabilities are floored away from 0 and 1.
pub fn loss(
    pred: &Prediction,
    dfs_target: f64,
    mask_target: &RealGrid,
    lambda: f64,
) -> Result<LossValue> {
    let heat = &pred.heatmap;
    check((heat.width(), heat.height()), mask_target, lambda)?;
    let n = heat.values().len() as f64;
    let mask = heat
        .values()
        .iter()
        .zip(mask_target.values())
        .map(|(&h, &m)| {
            let h = h.clamp(PROB_FLOOR, 1.0 - PROB_FLOOR);
            -(m * h.ln() + (1.0 - m) * (1.0 - h).ln())
        })
        .sum::<f64>()
        / n;
    Ok(combine(mask, (pred.quality - dfs_target).powi(2), lambda))
}

/// Binary cross-entropy from a logit, stable for large `|a|`.
fn bce_logit(a: f64, m: f64) -> f64 {
    a.max(0.0) - a * m + (-a.abs()).exp().ln_1p()
}

/// Loss of a cached forward pass and its exact gradient with respect to
/// every parameter, accumulated into `grad`.
pub fn loss_and_gradients(
    params: &ModelParams,
    cache: &ForwardCache,
    dfs_target: f64,
    mask_target: &RealGrid,
    lambda: f64,
    grad: &mut [f64],
) -> Result<LossValue> {
    let pred = &cache.prediction;
    check(
        (pred.heatmap.width(), pred.heatmap.height()),
        mask_target,
        lambda,
    )?;
    let logits = cache.heatmap_logits();
    let n = logits.len() as f64;
    let mut mask = 0.0;
    let mut d_logits = Vec::with_capacity(logits.len());
    for ((&a, &h), &m) in logits
        .iter()
        .zip(pred.heatmap.values())
        .zip(mask_target.values())
    {
        mask += bce_logit(a, m);
        d_logits.push(lambda * (h - m) / n);
    }
    mask /= n;
    let diff = pred.quality - dfs_target;
    let d_quality = 2.0 * (1.0 - lambda) * diff;
    backward(params, cache, d_quality, &d_logits, grad)?;
    Ok(combine(mask, diff * diff, lambda))
}
