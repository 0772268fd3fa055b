//! Encoder, heatmap head and regression head, with exact backpropagation.
//!
//! Tensors are stored row-major with channels innermost (HWC). Convolution
//! weights are laid out `[ky][kx][in][out]`.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::pooling::pool_slices;
use crate::error::{Error, Result};
use crate::image::{FeatureMap, GrayImage, RealGrid};

/// Ratio between input resolution and feature/heatmap resolution.
pub const DOWNSAMPLE: usize = 4;

/// Channel widths of the three encoder stages.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub channels: [usize; 3],
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            channels: [8, 16, 16],
        }
    }
}

impl ModelConfig {
    pub const MAX_CHANNELS: usize = 64;

    pub fn validate(&self) -> Result<()> {
        if self
            .channels
            .iter()
            .any(|&c| c == 0 || c > Self::MAX_CHANNELS)
        {
            return Err(Error::Config(format!(
                "encoder channels {:?} must lie in 1..={}",
                self.channels,
                Self::MAX_CHANNELS
            )));
        }
        Ok(())
    }

    fn convs(&self) -> [ConvShape; 4] {
        let [c1, c2, c3] = self.channels;
        [
            ConvShape {
                kernel: 3,
                stride: 2,
                cin: 1,
                cout: c1,
            },
            ConvShape {
                kernel: 3,
                stride: 2,
                cin: c1,
                cout: c2,
            },
            ConvShape {
                kernel: 3,
                stride: 1,
                cin: c2,
                cout: c3,
            },
            // 1x1 heatmap head
            ConvShape {
                kernel: 1,
                stride: 1,
                cin: c3,
                cout: 1,
            },
        ]
    }

    /// Offsets of every tensor inside the flat parameter vector.
    fn layout(&self) -> Layout {
        let mut offset = 0;
        let mut convs = [(0, 0); 4];
        for (slot, shape) in convs.iter_mut().zip(self.convs()) {
            let w = offset;
            offset += shape.weight_len();
            let b = offset;
            offset += shape.cout;
            *slot = (w, b);
        }
        let reg_w = offset;
        offset += self.channels[2];
        let reg_b = offset;
        offset += 1;
        Layout {
            convs,
            reg_w,
            reg_b,
            len: offset,
        }
    }

    pub fn parameter_count(&self) -> usize {
        self.layout().len
    }
}

#[derive(Debug, Clone, Copy)]
struct ConvShape {
    kernel: usize,
    stride: usize,
    cin: usize,
    cout: usize,
}

impl ConvShape {
    fn weight_len(&self) -> usize {
        self.kernel * self.kernel * self.cin * self.cout
    }

    fn out_dims(&self, w: usize, h: usize) -> (usize, usize) {
        let pad = self.kernel / 2;
        (
            (w + 2 * pad - self.kernel) / self.stride + 1,
            (h + 2 * pad - self.kernel) / self.stride + 1,
        )
    }
}

#[derive(Debug, Clone, Copy)]
struct Layout {
    /// (weight offset, bias offset) of conv1..conv3 and the heatmap head.
    convs: [(usize, usize); 4],
    reg_w: usize,
    reg_b: usize,
    len: usize,
}

/// All trainable weights as one flat vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub config: ModelConfig,
    pub values: Vec<f64>,
}

impl ModelParams {
    pub fn zeros(config: ModelConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            values: vec![0.0; config.parameter_count()],
        })
    }

    /// Glorot-uniform weights, `a = sqrt(6 / (fan_in + fan_out))`, zero biases.
    pub fn init(config: ModelConfig, seed: u64) -> Result<Self> {
        let mut params = Self::zeros(config)?;
        let layout = config.layout();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for (shape, (w, _)) in config.convs().iter().zip(layout.convs) {
            let fan_in = shape.kernel * shape.kernel * shape.cin;
            let fan_out = shape.kernel * shape.kernel * shape.cout;
            let a = (6.0 / (fan_in + fan_out) as f64).sqrt();
            for v in &mut params.values[w..w + shape.weight_len()] {
                *v = rng.gen_range(-a..a);
            }
        }
        let a = (6.0 / (config.channels[2] + 1) as f64).sqrt();
        for v in &mut params.values[layout.reg_w..layout.reg_b] {
            *v = rng.gen_range(-a..a);
        }
        Ok(params)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn check(&self) -> Result<Layout> {
        self.config.validate()?;
        let layout = self.config.layout();
        if self.values.len() != layout.len {
            return Err(Error::DimensionMismatch(format!(
                "{} parameters for a model that needs {}",
                self.values.len(),
                layout.len
            )));
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("model parameter".into()));
        }
        Ok(layout)
    }

    /// Regression head bias.
    pub fn regression_bias(&self) -> f64 {
        self.values[self.config.layout().reg_b]
    }

    pub fn set_regression_bias(&mut self, b: f64) {
        let i = self.config.layout().reg_b;
        self.values[i] = b;
    }

    /// Zeroes the regression weights and sets its bias.
    pub fn reset_regression_head(&mut self, bias: f64) {
        let l = self.config.layout();
        self.values[l.reg_w..l.reg_b]
            .iter_mut()
            .for_each(|v| *v = 0.0);
        self.values[l.reg_b] = bias;
    }
}

/// Output of the model on one image.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    /// Predicted quality, strictly inside (0, 1).
    pub quality: f64,
    /// Iris-region weights at 1/4 input resolution, each in (0, 1).
    pub heatmap: RealGrid,
}

/// Activations kept from a forward pass for backpropagation.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    pub prediction: Prediction,
    dims: [(usize, usize); 4],
    input: Vec<f64>,
    act1: Vec<f64>,
    act2: Vec<f64>,
    features: Vec<f64>,
    heat_logits: Vec<f64>,
    pooled: Vec<f64>,
}

impl ForwardCache {
    /// Encoder output at 1/4 resolution.
    pub fn features(&self) -> Result<FeatureMap> {
        let (w, h) = self.dims[3];
        FeatureMap::new(w, h, self.features.len() / (w * h), self.features.clone())
    }

    /// Heatmap logits (before the sigmoid).
    pub fn heatmap_logits(&self) -> &[f64] {
        &self.heat_logits
    }

    /// The pooled quality vector fed to the regression head.
    pub fn pooled(&self) -> &[f64] {
        &self.pooled
    }
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Maps 8-bit intensities to [-1, 1].
fn normalize_input(image: &GrayImage) -> Vec<f64> {
    image
        .pixels()
        .iter()
        .map(|&p| f64::from(p) / 127.5 - 1.0)
        .collect()
}

fn conv_forward(
    input: &[f64],
    (w, h): (usize, usize),
    shape: ConvShape,
    weights: &[f64],
    bias: &[f64],
) -> Vec<f64> {
    let (ow, oh) = shape.out_dims(w, h);
    let pad = shape.kernel / 2;
    let (cin, cout) = (shape.cin, shape.cout);
    let mut out = vec![0.0; ow * oh * cout];
    for oy in 0..oh {
        for ox in 0..ow {
            let acc = &mut out[(oy * ow + ox) * cout..][..cout];
            acc.copy_from_slice(bias);
            for ky in 0..shape.kernel {
                let iy = (oy * shape.stride + ky) as isize - pad as isize;
                if iy < 0 || iy >= h as isize {
                    continue;
                }
                for kx in 0..shape.kernel {
                    let ix = (ox * shape.stride + kx) as isize - pad as isize;
                    if ix < 0 || ix >= w as isize {
                        continue;
                    }
                    let cell = &input[(iy as usize * w + ix as usize) * cin..][..cin];
                    let wbase = (ky * shape.kernel + kx) * cin * cout;
                    for (ci, &v) in cell.iter().enumerate() {
                        if v == 0.0 {
                            continue;
                        }
                        let wrow = &weights[wbase + ci * cout..][..cout];
                        for (a, &wt) in acc.iter_mut().zip(wrow) {
                            *a += v * wt;
                        }
                    }
                }
            }
        }
    }
    out
}

/// Accumulates weight/bias gradients and, when requested, the input gradient.
#[allow(clippy::too_many_arguments)]
fn conv_backward(
    input: &[f64],
    (w, h): (usize, usize),
    shape: ConvShape,
    weights: &[f64],
    d_out: &[f64],
    grad_w: &mut [f64],
    grad_b: &mut [f64],
    mut d_in: Option<&mut [f64]>,
) {
    let (ow, oh) = shape.out_dims(w, h);
    let pad = shape.kernel / 2;
    let (cin, cout) = (shape.cin, shape.cout);
    for oy in 0..oh {
        for ox in 0..ow {
            let g = &d_out[(oy * ow + ox) * cout..][..cout];
            if g.iter().all(|&v| v == 0.0) {
                continue;
            }
            for (b, &gv) in grad_b.iter_mut().zip(g) {
                *b += gv;
            }
            for ky in 0..shape.kernel {
                let iy = (oy * shape.stride + ky) as isize - pad as isize;
                if iy < 0 || iy >= h as isize {
                    continue;
                }
                for kx in 0..shape.kernel {
                    let ix = (ox * shape.stride + kx) as isize - pad as isize;
                    if ix < 0 || ix >= w as isize {
                        continue;
                    }
                    let in_base = (iy as usize * w + ix as usize) * cin;
                    let wbase = (ky * shape.kernel + kx) * cin * cout;
                    for ci in 0..cin {
                        let v = input[in_base + ci];
                        let off = wbase + ci * cout;
                        if v != 0.0 {
                            for (gw, &gv) in grad_w[off..off + cout].iter_mut().zip(g) {
                                *gw += v * gv;
                            }
                        }
                        if let Some(d) = d_in.as_deref_mut() {
                            let wrow = &weights[off..off + cout];
                            d[in_base + ci] += wrow.iter().zip(g).map(|(a, b)| a * b).sum::<f64>();
                        }
                    }
                }
            }
        }
    }
}

fn relu_in_place(v: &mut [f64]) {
    v.iter_mut().for_each(|x| *x = x.max(0.0));
}

/// Zeroes gradient entries whose ReLU output was not positive.
fn relu_backward(grad: &mut [f64], activation: &[f64]) {
    for (g, &a) in grad.iter_mut().zip(activation) {
        if a <= 0.0 {
            *g = 0.0;
        }
    }
}

fn check_input(image: &GrayImage) -> Result<()> {
    if !image.width().is_multiple_of(DOWNSAMPLE) || !image.height().is_multiple_of(DOWNSAMPLE) {
        return Err(Error::DimensionMismatch(format!(
            "image {}x{} is not divisible by {DOWNSAMPLE}",
            image.width(),
            image.height()
        )));
    }
    Ok(())
}

/// Runs the model and keeps every activation needed by [`backward`].
pub fn forward(params: &ModelParams, image: &GrayImage) -> Result<ForwardCache> {
    let layout = params.check()?;
    check_input(image)?;
    let shapes = params.config.convs();
    let p = &params.values;
    let slice = |i: usize| {
        let (w, b) = layout.convs[i];
        (&p[w..w + shapes[i].weight_len()], &p[b..b + shapes[i].cout])
    };

    let d0 = (image.width(), image.height());
    let input = normalize_input(image);
    let (w1, b1) = slice(0);
    let mut act1 = conv_forward(&input, d0, shapes[0], w1, b1);
    relu_in_place(&mut act1);
    let d1 = shapes[0].out_dims(d0.0, d0.1);
    let (w2, b2) = slice(1);
    let mut act2 = conv_forward(&act1, d1, shapes[1], w2, b2);
    relu_in_place(&mut act2);
    let d2 = shapes[1].out_dims(d1.0, d1.1);
    let (w3, b3) = slice(2);
    let mut features = conv_forward(&act2, d2, shapes[2], w3, b3);
    relu_in_place(&mut features);
    let d3 = shapes[2].out_dims(d2.0, d2.1);
    let (wh, bh) = slice(3);
    let heat_logits = conv_forward(&features, d3, shapes[3], wh, bh);
    let heat: Vec<f64> = heat_logits.iter().map(|&a| sigmoid(a)).collect();

    let pooled = pool_slices(&features, &heat, params.config.channels[2])?;
    let reg_w = &p[layout.reg_w..layout.reg_b];
    let logit = reg_w.iter().zip(&pooled).map(|(a, b)| a * b).sum::<f64>() + p[layout.reg_b];
    let quality = sigmoid(logit);

    let heatmap = RealGrid::new(d3.0, d3.1, heat)?;
    Ok(ForwardCache {
        prediction: Prediction { quality, heatmap },
        dims: [d0, d1, d2, d3],
        input,
        act1,
        act2,
        features,
        heat_logits,
        pooled,
    })
}

/// Inference only.
pub fn predict(params: &ModelParams, image: &GrayImage) -> Result<Prediction> {
    Ok(forward(params, image)?.prediction)
}

/// Backpropagates output gradients through the whole model.
///
/// `d_quality` is dL/dq for the sigmoid quality output and `d_heat_logits`
/// is dL/da for each heatmap logit from losses applied to the heatmap
/// directly. The pooling path into the heatmap is added here. Gradients are
/// accumulated into `grad`.
pub fn backward(
    params: &ModelParams,
    cache: &ForwardCache,
    d_quality: f64,
    d_heat_logits: &[f64],
    grad: &mut [f64],
) -> Result<()> {
    let layout = params.check()?;
    if grad.len() != layout.len || d_heat_logits.len() != cache.heat_logits.len() {
        return Err(Error::DimensionMismatch(
            "gradient buffers do not match the model".into(),
        ));
    }
    let shapes = params.config.convs();
    let p = &params.values;
    let channels = params.config.channels[2];
    let q = cache.prediction.quality;
    let heat = cache.prediction.heatmap.values();

    // regression head
    let d_logit = d_quality * q * (1.0 - q);
    let reg_w = &p[layout.reg_w..layout.reg_b];
    for (g, &pz) in grad[layout.reg_w..layout.reg_b]
        .iter_mut()
        .zip(&cache.pooled)
    {
        *g += d_logit * pz;
    }
    grad[layout.reg_b] += d_logit;
    let d_pooled: Vec<f64> = reg_w.iter().map(|w| d_logit * w).collect();

    // attention pooling
    let total: f64 = heat.iter().sum();
    let mut d_features = vec![0.0; cache.features.len()];
    let mut d_heat_logit: Vec<f64> = d_heat_logits.to_vec();
    for (i, (cell, &h)) in cache.features.chunks_exact(channels).zip(heat).enumerate() {
        let d_cell = &mut d_features[i * channels..(i + 1) * channels];
        let mut d_h = 0.0;
        for z in 0..channels {
            d_cell[z] += d_pooled[z] * h / total;
            d_h += d_pooled[z] * (cell[z] - cache.pooled[z]) / total;
        }
        d_heat_logit[i] += d_h * h * (1.0 - h);
    }

    // heatmap head (1x1 conv); split borrows by layout order
    let [(w1, b1), (w2, b2), (w3, b3), (wh, bh)] = layout.convs;
    {
        let (gw, gb) = split_pair(grad, wh, bh, shapes[3]);
        conv_backward(
            &cache.features,
            cache.dims[3],
            shapes[3],
            &p[wh..bh],
            &d_heat_logit,
            gw,
            gb,
            Some(&mut d_features),
        );
    }
    relu_backward(&mut d_features, &cache.features);

    let mut d_act2 = vec![0.0; cache.act2.len()];
    {
        let (gw, gb) = split_pair(grad, w3, b3, shapes[2]);
        conv_backward(
            &cache.act2,
            cache.dims[2],
            shapes[2],
            &p[w3..b3],
            &d_features,
            gw,
            gb,
            Some(&mut d_act2),
        );
    }
    relu_backward(&mut d_act2, &cache.act2);

    let mut d_act1 = vec![0.0; cache.act1.len()];
    {
        let (gw, gb) = split_pair(grad, w2, b2, shapes[1]);
        conv_backward(
            &cache.act1,
            cache.dims[1],
            shapes[1],
            &p[w2..b2],
            &d_act2,
            gw,
            gb,
            Some(&mut d_act1),
        );
    }
    relu_backward(&mut d_act1, &cache.act1);

    let (gw, gb) = split_pair(grad, w1, b1, shapes[0]);
    conv_backward(
        &cache.input,
        cache.dims[0],
        shapes[0],
        &p[w1..b1],
        &d_act1,
        gw,
        gb,
        None,
    );
    Ok(())
}

/// Disjoint mutable views of one conv layer's weight and bias gradients.
fn split_pair(grad: &mut [f64], w: usize, b: usize, shape: ConvShape) -> (&mut [f64], &mut [f64]) {
    let (weights, rest) = grad[w..b + shape.cout].split_at_mut(b - w);
    (weights, rest)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn image(w: usize, h: usize, seed: u64) -> GrayImage {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        GrayImage::from_fn(w, h, |_, _| rng.gen()).unwrap()
    }

    #[test]
    fn parameter_count_matches_layout() {
        let c = ModelConfig {
            channels: [2, 3, 4],
        };
        // conv1 9*1*2+2, conv2 9*2*3+3, conv3 9*3*4+4, head 4+1, reg 4+1
        assert_eq!(c.parameter_count(), 20 + 57 + 112 + 5 + 5);
    }

    #[test]
    fn heatmap_is_quarter_resolution() {
        let params = ModelParams::init(
            ModelConfig {
                channels: [2, 3, 4],
            },
            1,
        )
        .unwrap();
        let pred = predict(&params, &image(64, 48, 2)).unwrap();
        assert_eq!((pred.heatmap.width(), pred.heatmap.height()), (16, 12));
        assert!(pred.quality > 0.0 && pred.quality < 1.0);
        assert!(pred.heatmap.values().iter().all(|&h| h > 0.0 && h < 1.0));
    }

    #[test]
    fn zero_regression_head_gives_half() {
        let mut params = ModelParams::init(ModelConfig::default(), 3).unwrap();
        params.reset_regression_head(0.0);
        assert_eq!(predict(&params, &image(32, 32, 4)).unwrap().quality, 0.5);
        params.reset_regression_head(1.5);
        assert_eq!(
            predict(&params, &image(32, 32, 4)).unwrap().quality,
            sigmoid(1.5)
        );
    }

    #[test]
    fn rejects_indivisible_input_and_bad_params() {
        let params = ModelParams::init(ModelConfig::default(), 3).unwrap();
        assert!(matches!(
            predict(&params, &image(30, 32, 1)),
            Err(Error::DimensionMismatch(_))
        ));
        let mut broken = params.clone();
        broken.values.pop();
        assert!(matches!(
            predict(&broken, &image(32, 32, 1)),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn forward_is_deterministic() {
        let params = ModelParams::init(ModelConfig::default(), 9).unwrap();
        let img = image(64, 48, 5);
        assert_eq!(
            predict(&params, &img).unwrap(),
            predict(&params, &img).unwrap()
        );
    }

    #[test]
    fn sigmoid_is_stable() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!(sigmoid(-800.0) >= 0.0 && sigmoid(800.0) <= 1.0);
        assert!((sigmoid(2.0) + sigmoid(-2.0) - 1.0).abs() < 1e-15);
    }
}
