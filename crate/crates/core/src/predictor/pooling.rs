use crate::error::{Error, Result};
use crate::image::{FeatureMap, RealGrid};

/// Heatmap-weighted spatial average of a feature map, one value per channel:
///
/// `Q(z) = sum_xy H(x, y) F(x, y, z) / sum_xy H(x, y)`
///
/// ```
/// use irisq::{FeatureMap, RealGrid};
/// use irisq::predictor::attention_pool;
///
/// let f = FeatureMap::new(2, 2, 1, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
/// let h = RealGrid::new(2, 2, vec![1.0, 0.0, 0.0, 3.0]).unwrap();
/// assert_eq!(attention_pool(&f, &h).unwrap(), vec![3.25]);
/// ```
pub fn attention_pool(features: &FeatureMap, heatmap: &RealGrid) -> Result<Vec<f64>> {
    if (features.width(), features.height()) != (heatmap.width(), heatmap.height()) {
        return Err(Error::DimensionMismatch(format!(
            "feature map {}x{} vs heatmap {}x{}",
            features.width(),
            features.height(),
            heatmap.width(),
            heatmap.height()
        )));
    }
    if heatmap.values().iter().any(|&h| h < 0.0) {
        return Err(Error::Config("heatmap weights must be non-negative".into()));
    }
    pool_slices(features.values(), heatmap.values(), features.channels())
}

/// [`attention_pool`] on raw HWC slices.
pub(crate) fn pool_slices(features: &[f64], heatmap: &[f64], channels: usize) -> Result<Vec<f64>> {
    let total: f64 = heatmap.iter().sum();
    if total.is_nan() || total <= 0.0 {
        return Err(Error::ZeroHeatmap);
    }
    let mut pooled = vec![0.0; channels];
    for (cell, &h) in features.chunks_exact(channels).zip(heatmap) {
        for (q, &f) in pooled.iter_mut().zip(cell) {
            *q += h * f;
        }
    }
    pooled.iter_mut().for_each(|q| *q /= total);
    Ok(pooled)
}
