//! Seeded synthetic iris dataset generator.
//!
//! Each class gets a unit embedding and a radial texture. Each sample renders
//! the class texture with a random set of distortions (defocus blur, eyelid
//! occlusion, exposure, pupil dilation, off-center placement) and perturbs
//! the class embedding in proportion to a severity score, so that images
//! that look worse also sit farther from their enrollment in feature space.
//!
//! Every random draw comes from a ChaCha stream keyed by the dataset seed,
//! with the stream id derived from `(class_id, sample_index)`. Samples can
//! therefore be generated in any order with identical results.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::embedding::Embedding;
use crate::error::{Error, Result};
use crate::fsutil::ensure_dir;
use crate::geometry::{write_mask, IrisGeometry, OcclusionMask};
use crate::image::{write_image, GrayImage};
use crate::manifest::{save_manifest, SampleRecord};

/// Distortions applied to one rendered sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistortionSpec {
    /// Gaussian blur standard deviation, pixels.
    pub blur_sigma: f64,
    /// Fraction of the annulus hidden under the eyelid band.
    pub occlusion_fraction: f64,
    /// Intensity multiplier.
    pub exposure_gain: f64,
    /// Pupil radius as a fraction of the iris radius.
    pub dilation_target: f64,
    /// Displacement of the eye from the image center, pixels.
    pub off_center_px: f64,
}

impl DistortionSpec {
    /// The undistorted capture used for enrollment.
    pub fn clean(nominal_dilation: f64) -> Self {
        Self {
            blur_sigma: 0.0,
            occlusion_fraction: 0.0,
            exposure_gain: 1.0,
            dilation_target: nominal_dilation,
            off_center_px: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.blur_sigma >= 0.0
            && (0.0..=1.0).contains(&self.occlusion_fraction)
            && self.exposure_gain > 0.0
            && self.dilation_target > 0.0
            && self.dilation_target < 1.0
            && self.off_center_px >= 0.0
            && [
                self.blur_sigma,
                self.occlusion_fraction,
                self.exposure_gain,
                self.off_center_px,
            ]
            .iter()
            .all(|v| v.is_finite());
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("distortion out of range: {self:?}")))
        }
    }
}

/// Relative contribution of each distortion to the severity score.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeverityWeights {
    pub blur: f64,
    pub occlusion: f64,
    pub exposure: f64,
    pub dilation: f64,
    pub off_center: f64,
}

impl Default for SeverityWeights {
    fn default() -> Self {
        Self {
            blur: 0.35,
            occlusion: 0.30,
            exposure: 0.15,
            dilation: 0.10,
            off_center: 0.10,
        }
    }
}

/// Generator configuration. Every field has a default, so a config file
/// only needs the fields it changes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub n_classes: usize,
    pub samples_per_class: usize,
    pub image_width: usize,
    pub image_height: usize,
    pub embedding_dim: usize,
    pub seed: u64,
    /// Upper bound on pairwise cosine similarity between class embeddings.
    pub class_separation: f64,
    /// Candidate draws per class before giving up on `class_separation`.
    pub max_class_retries: usize,
    /// Iris radius as a fraction of the shorter image side.
    pub iris_radius_fraction: f64,
    /// Global multiplier on the iris radius.
    pub iris_scale: f64,
    /// Per-class radius jitter, as a relative half-width.
    pub iris_radius_jitter: f64,
    /// Pupil-to-iris ratio of an undistorted capture.
    pub nominal_dilation: f64,
    /// Probability that a given distortion is present in a probe.
    pub distortion_probability: f64,
    pub blur_sigma_max: f64,
    pub occlusion_fraction_max: f64,
    pub exposure_gain_range: (f64, f64),
    pub dilation_range: (f64, f64),
    pub off_center_px_max: f64,
    pub severity_weights: SeverityWeights,
    /// Embedding perturbation per unit severity.
    pub severity_to_embedding_noise: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_classes: 20,
            samples_per_class: 20,
            image_width: 128,
            image_height: 96,
            embedding_dim: 64,
            seed: 7,
            class_separation: 0.5,
            max_class_retries: 1000,
            iris_radius_fraction: 0.3,
            iris_scale: 1.0,
            iris_radius_jitter: 0.08,
            nominal_dilation: 0.4,
            distortion_probability: 0.5,
            blur_sigma_max: 2.5,
            occlusion_fraction_max: 0.6,
            exposure_gain_range: (0.5, 1.6),
            dilation_range: (0.2, 0.65),
            off_center_px_max: 8.0,
            severity_weights: SeverityWeights::default(),
            severity_to_embedding_noise: 5.0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.n_classes < 2 || self.samples_per_class < 2 {
            return fail(format!(
                "{} classes x {} samples; need at least 2 of each",
                self.n_classes, self.samples_per_class
            ));
        }
        if !self.image_width.is_multiple_of(4) || !self.image_height.is_multiple_of(4) {
            return fail(format!(
                "image size {}x{} must be divisible by 4",
                self.image_width, self.image_height
            ));
        }
        if self.image_width < 16 || self.image_height < 16 {
            return fail("images must be at least 16x16".into());
        }
        if self.embedding_dim < 2 {
            return fail("embedding_dim must be at least 2".into());
        }
        if !(self.class_separation > -1.0 && self.class_separation <= 1.0) {
            return fail(format!(
                "class_separation {} outside (-1, 1]",
                self.class_separation
            ));
        }
        if self.severity_to_embedding_noise.is_nan() || self.severity_to_embedding_noise <= 0.0 {
            return fail("severity_to_embedding_noise must be positive".into());
        }
        let (g0, g1) = self.exposure_gain_range;
        let (d0, d1) = self.dilation_range;
        let ranges_ok = self.blur_sigma_max >= 0.0
            && (0.0..=1.0).contains(&self.occlusion_fraction_max)
            && 0.0 < g0
            && g0 <= 1.0
            && 1.0 <= g1
            && 0.0 < d0
            && d0 <= self.nominal_dilation
            && self.nominal_dilation <= d1
            && d1 < 1.0
            && self.off_center_px_max >= 0.0
            && (0.0..=1.0).contains(&self.distortion_probability)
            && self.iris_radius_fraction > 0.0
            && self.iris_scale > 0.0
            && (0.0..1.0).contains(&self.iris_radius_jitter);
        if !ranges_ok {
            return fail("distortion ranges must bracket the undistorted capture".into());
        }
        let w = self.severity_weights;
        if [w.blur, w.occlusion, w.exposure, w.dilation, w.off_center]
            .iter()
            .any(|v| *v < 0.0)
        {
            return fail("severity weights must be non-negative".into());
        }
        Ok(())
    }

    /// Iris radius before per-class jitter.
    pub fn base_iris_radius(&self) -> f64 {
        self.iris_radius_fraction * self.image_width.min(self.image_height) as f64 * self.iris_scale
    }

    /// Each distortion magnitude mapped to `[0, 1]`, in weight order
    /// (blur, occlusion, exposure, dilation, off-center).
    pub fn normalized_magnitudes(&self, spec: &DistortionSpec) -> [f64; 5] {
        let ratio = |v: f64, max: f64| {
            if max > 0.0 {
                (v / max).clamp(0.0, 1.0)
            } else {
                0.0
            }
        };
        let (g0, g1) = self.exposure_gain_range;
        let (d0, d1) = self.dilation_range;
        [
            ratio(spec.blur_sigma, self.blur_sigma_max),
            ratio(spec.occlusion_fraction, self.occlusion_fraction_max),
            ratio(
                spec.exposure_gain.ln().abs(),
                g0.ln().abs().max(g1.ln().abs()),
            ),
            ratio(
                (spec.dilation_target - self.nominal_dilation).abs(),
                (self.nominal_dilation - d0).max(d1 - self.nominal_dilation),
            ),
            ratio(spec.off_center_px, self.off_center_px_max),
        ]
    }

    /// Weighted sum of normalized distortion magnitudes.
    pub fn severity(&self, spec: &DistortionSpec) -> f64 {
        let w = self.severity_weights;
        let m = self.normalized_magnitudes(spec);
        w.blur * m[0]
            + w.occlusion * m[1]
            + w.exposure * m[2]
            + w.dilation * m[3]
            + w.off_center * m[4]
    }

    /// Draws a probe's distortions. Each distortion is present with
    /// `distortion_probability`, with magnitude uniform over its range.
    pub fn sample_spec(&self, rng: &mut impl Rng) -> DistortionSpec {
        let mut spec = DistortionSpec::clean(self.nominal_dilation);
        let p = self.distortion_probability;
        // fixed draw order: (active, magnitude) per distortion
        let draw = |rng: &mut dyn rand::RngCore| -> Option<f64> {
            let active = rng.gen::<f64>() < p;
            let u = rng.gen::<f64>();
            active.then_some(u)
        };
        if let Some(u) = draw(rng) {
            spec.blur_sigma = u * self.blur_sigma_max;
        }
        if let Some(u) = draw(rng) {
            spec.occlusion_fraction = u * self.occlusion_fraction_max;
        }
        if let Some(u) = draw(rng) {
            let (lo, hi) = (
                self.exposure_gain_range.0.ln(),
                self.exposure_gain_range.1.ln(),
            );
            spec.exposure_gain = (lo + u * (hi - lo)).exp();
        }
        if let Some(u) = draw(rng) {
            let (lo, hi) = self.dilation_range;
            spec.dilation_target = lo + u * (hi - lo);
        }
        if let Some(u) = draw(rng) {
            spec.off_center_px = u * self.off_center_px_max;
        }
        spec
    }
}

/// Stream id of a class prototype (`sample = None`) or of one sample.
fn stream_id(class_id: usize, sample: Option<usize>) -> u64 {
    ((class_id as u64) << 32) | sample.map_or(0, |s| s as u64 + 1)
}

fn stream(seed: u64, class_id: usize, sample: Option<usize>) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id(class_id, sample));
    rng
}

/// One sinusoidal texture component in normalized polar coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Wave {
    angular: f64,
    radial: f64,
    phase_a: f64,
    phase_r: f64,
    amplitude: f64,
}

const TEXTURE_ANGULAR_CELLS: usize = 72;
const TEXTURE_RADIAL_CELLS: usize = 8;

/// Class identity: embedding, iris size and iris texture.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassPrototype {
    pub class_id: usize,
    pub embedding: Embedding,
    pub iris_radius: f64,
    base_level: f64,
    waves: Vec<Wave>,
    /// Fine texture on a polar grid, angular-major.
    cells: Vec<f64>,
}

impl ClassPrototype {
    fn draw(config: &SynthConfig, class_id: usize, rng: &mut ChaCha8Rng) -> Self {
        let embedding = random_unit(config.embedding_dim, rng);
        let jitter = 1.0 + config.iris_radius_jitter * (2.0 * rng.gen::<f64>() - 1.0);
        let iris_radius = config.base_iris_radius() * jitter;
        let base_level = 80.0 + 40.0 * rng.gen::<f64>();
        let waves = (0..6)
            .map(|_| Wave {
                angular: f64::from(rng.gen_range(2..16u32)),
                radial: PI * (1.0 + 5.0 * rng.gen::<f64>()),
                phase_a: 2.0 * PI * rng.gen::<f64>(),
                phase_r: 2.0 * PI * rng.gen::<f64>(),
                amplitude: 6.0 + 10.0 * rng.gen::<f64>(),
            })
            .collect();
        let cells = (0..TEXTURE_ANGULAR_CELLS * TEXTURE_RADIAL_CELLS)
            .map(|_| 50.0 * (rng.gen::<f64>() - 0.5))
            .collect();
        Self {
            class_id,
            embedding,
            iris_radius,
            base_level,
            waves,
            cells,
        }
    }

    /// Iris intensity at normalized radius `rho` in [0, 1) and angle `theta`.
    fn texture(&self, rho: f64, theta: f64) -> f64 {
        let mut v = self.base_level;
        for w in &self.waves {
            v += w.amplitude
                * (w.angular * theta + w.phase_a).cos()
                * (w.radial * rho + w.phase_r).cos();
        }
        // bilinear lookup on the fine grid, periodic in angle
        let a = theta.rem_euclid(2.0 * PI) / (2.0 * PI) * TEXTURE_ANGULAR_CELLS as f64;
        let r = (rho.clamp(0.0, 1.0) * (TEXTURE_RADIAL_CELLS - 1) as f64)
            .min((TEXTURE_RADIAL_CELLS - 1) as f64);
        let (a0, r0) = (
            a.floor() as usize % TEXTURE_ANGULAR_CELLS,
            r.floor() as usize,
        );
        let (a1, r1) = (
            (a0 + 1) % TEXTURE_ANGULAR_CELLS,
            (r0 + 1).min(TEXTURE_RADIAL_CELLS - 1),
        );
        let (ta, tr) = (a - a.floor(), r - r.floor());
        let cell = |ai: usize, ri: usize| self.cells[ai * TEXTURE_RADIAL_CELLS + ri];
        v + cell(a0, r0) * (1.0 - ta) * (1.0 - tr)
            + cell(a1, r0) * ta * (1.0 - tr)
            + cell(a0, r1) * (1.0 - ta) * tr
            + cell(a1, r1) * ta * tr
    }
}

fn random_unit(dim: usize, rng: &mut impl Rng) -> Embedding {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        if let Ok(e) = Embedding::new(v) {
            return e;
        }
    }
}

/// Generates prototypes for classes `0..count`, each rejection-sampled from
/// its own stream until its cosine similarity to every earlier class is
/// below `class_separation`.
pub fn gen_classes(config: &SynthConfig, count: usize) -> Result<Vec<ClassPrototype>> {
    config.validate()?;
    let mut out: Vec<ClassPrototype> = Vec::with_capacity(count);
    for class_id in 0..count {
        let mut rng = stream(config.seed, class_id, None);
        let mut accepted = None;
        for _ in 0..config.max_class_retries.max(1) {
            let candidate = ClassPrototype::draw(config, class_id, &mut rng);
            let separated = out.iter().all(|p| {
                candidate.embedding.dot(&p.embedding).expect("same dim") < config.class_separation
            });
            if separated {
                accepted = Some(candidate);
                break;
            }
        }
        out.push(accepted.ok_or_else(|| {
            Error::Config(format!(
                "class {class_id}: no embedding with cosine < {} after {} draws",
                config.class_separation, config.max_class_retries
            ))
        })?);
    }
    Ok(out)
}

/// Prototype of one class; a pure function of `(config.seed, class_id)`.
pub fn gen_class(config: &SynthConfig, class_id: usize) -> Result<ClassPrototype> {
    if class_id >= config.n_classes {
        return Err(Error::Config(format!(
            "class {class_id} >= n_classes {}",
            config.n_classes
        )));
    }
    Ok(gen_classes(config, class_id + 1)?.pop().expect("nonempty"))
}

/// A rendered sample and the quantities it was generated from.
#[derive(Debug, Clone)]
pub struct SynthSample {
    pub image: GrayImage,
    pub mask: OcclusionMask,
    pub geometry: IrisGeometry,
    pub embedding: Embedding,
    pub spec: DistortionSpec,
    pub severity: f64,
}

const PUPIL_LEVEL: f64 = 22.0;
const SCLERA_LEVEL: f64 = 190.0;
const LID_LEVEL: f64 = 150.0;

/// Renders one sample of `prototype` under `spec`. Draws, in order, the
/// off-center direction and the embedding noise direction from `rng`.
pub fn gen_sample(
    config: &SynthConfig,
    prototype: &ClassPrototype,
    spec: &DistortionSpec,
    rng: &mut impl Rng,
) -> Result<SynthSample> {
    spec.validate()?;
    let (w, h) = (config.image_width, config.image_height);
    let angle = 2.0 * PI * rng.gen::<f64>();
    let center = (
        w as f64 / 2.0 + spec.off_center_px * angle.cos(),
        h as f64 / 2.0 + spec.off_center_px * angle.sin(),
    );
    let iris_r = prototype.iris_radius;
    let geometry = IrisGeometry::concentric(center, spec.dilation_target * iris_r, iris_r)?;
    geometry.validate_within(w, h)?;

    let lid_row = eyelid_row(&geometry, w, h, spec.occlusion_fraction);
    let mask = OcclusionMask::from_fn(w, h, |x, y| {
        geometry.in_annulus(x, y) && (y as f64 + 0.5) >= lid_row
    });

    let mut canvas = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let (px, py) = (x as f64 + 0.5, y as f64 + 0.5);
            let v = if py < lid_row {
                // eyelid with lashes along its edge
                let lashes = if lid_row - py < 3.0 {
                    -60.0 * (0.5 + 0.5 * (px * 1.7).sin())
                } else {
                    0.0
                };
                LID_LEVEL + 8.0 * (py * 0.3).sin() + lashes
            } else {
                let (dx, dy) = (px - center.0, py - center.1);
                let r = (dx * dx + dy * dy).sqrt();
                if r < geometry.pupil_radius {
                    PUPIL_LEVEL
                } else if r < iris_r {
                    let rho = (r - geometry.pupil_radius) / (iris_r - geometry.pupil_radius);
                    prototype.texture(rho, dy.atan2(dx))
                } else {
                    SCLERA_LEVEL - 20.0 * ((r - iris_r) / iris_r).min(1.0)
                }
            };
            canvas[y * w + x] = v;
        }
    }
    if spec.blur_sigma > 0.0 {
        gaussian_blur(&mut canvas, w, h, spec.blur_sigma);
    }
    let image = GrayImage::new(
        w,
        h,
        canvas
            .iter()
            .map(|v| (v * spec.exposure_gain).round().clamp(0.0, 255.0) as u8)
            .collect(),
    )?;

    let severity = config.severity(spec);
    let noise = random_unit(config.embedding_dim, rng);
    let kappa = config.severity_to_embedding_noise * severity;
    let embedding = if kappa == 0.0 {
        prototype.embedding.clone()
    } else {
        Embedding::new(
            prototype
                .embedding
                .values()
                .iter()
                .zip(noise.values())
                .map(|(e, g)| e + kappa * g)
                .collect(),
        )?
    };
    Ok(SynthSample {
        image,
        mask,
        geometry,
        embedding,
        spec: *spec,
        severity,
    })
}

/// Row (in pixel-center coordinates) above which the eyelid covers the eye,
/// chosen so that the hidden share of annulus pixels is as close as possible
/// to `fraction`.
fn eyelid_row(geometry: &IrisGeometry, w: usize, h: usize, fraction: f64) -> f64 {
    if fraction <= 0.0 {
        return f64::NEG_INFINITY;
    }
    let mut per_row = vec![0usize; h];
    for (_, y) in geometry.annulus_pixels(w, h) {
        per_row[y] += 1;
    }
    let total: usize = per_row.iter().sum();
    if fraction >= 1.0 {
        return h as f64 + 1.0;
    }
    let target = fraction * total as f64;
    let mut covered = 0usize;
    let mut best = (f64::INFINITY, 0usize);
    for (y, &count) in per_row.iter().enumerate() {
        let err = (covered as f64 - target).abs();
        if err < best.0 {
            best = (err, y);
        }
        covered += count;
    }
    // rows 0..best.1 are covered; boundary between pixel centers
    best.1 as f64
}

/// In-place separable Gaussian blur with replicate borders.
pub fn gaussian_blur(values: &mut [f64], w: usize, h: usize, sigma: f64) {
    let radius = (3.0 * sigma).ceil() as isize;
    let mut kernel: Vec<f64> = (-radius..=radius)
        .map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let norm: f64 = kernel.iter().sum();
    kernel.iter_mut().for_each(|k| *k /= norm);
    let mut tmp = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut s = 0.0;
            for (k, i) in kernel.iter().zip(-radius..=radius) {
                let xx = (x as isize + i).clamp(0, w as isize - 1) as usize;
                s += k * values[y * w + xx];
            }
            tmp[y * w + x] = s;
        }
    }
    for y in 0..h {
        for x in 0..w {
            let mut s = 0.0;
            for (k, i) in kernel.iter().zip(-radius..=radius) {
                let yy = (y as isize + i).clamp(0, h as isize - 1) as usize;
                s += k * tmp[yy * w + x];
            }
            values[y * w + x] = s;
        }
    }
}

/// Sample `sample_index` of class `class_id`. Index 0 is the undistorted
/// enrollment capture.
pub fn gen_indexed_sample(
    config: &SynthConfig,
    prototype: &ClassPrototype,
    sample_index: usize,
) -> Result<SynthSample> {
    let mut rng = stream(config.seed, prototype.class_id, Some(sample_index));
    let spec = if sample_index == 0 {
        DistortionSpec::clean(config.nominal_dilation)
    } else {
        config.sample_spec(&mut rng)
    };
    gen_sample(config, prototype, &spec, &mut rng)
}

pub fn class_label(class_id: usize) -> String {
    format!("c{class_id:03}")
}

pub fn sample_label(class_id: usize, sample_index: usize) -> String {
    format!("c{class_id:03}_s{sample_index:03}")
}

/// A generated dataset held in memory.
#[derive(Debug, Clone)]
pub struct SynthDataset {
    pub records: Vec<SampleRecord>,
    pub samples: Vec<SynthSample>,
}

/// Generates every sample in memory. File references in the records point
/// at `images/<id>.pgm` and `masks/<id>.pgm`.
pub fn gen_dataset_in_memory(config: &SynthConfig) -> Result<SynthDataset> {
    let prototypes = gen_classes(config, config.n_classes)?;
    let mut records = Vec::with_capacity(config.n_classes * config.samples_per_class);
    let mut samples = Vec::with_capacity(records.capacity());
    for proto in &prototypes {
        for s in 0..config.samples_per_class {
            let sample = gen_indexed_sample(config, proto, s)?;
            let id = sample_label(proto.class_id, s);
            records.push(SampleRecord {
                sample_id: id.clone(),
                class_id: class_label(proto.class_id),
                image_path: PathBuf::from(format!("images/{id}.pgm")),
                geometry: sample.geometry,
                occlusion_path: PathBuf::from(format!("masks/{id}.pgm")),
                embedding: sample.embedding.clone(),
                is_enrollment: s == 0,
                dfs_label: None,
                predicted_quality: None,
            });
            samples.push(sample);
        }
    }
    Ok(SynthDataset { records, samples })
}

/// File name of the manifest written by [`gen_dataset`].
pub const MANIFEST_NAME: &str = "manifest.jsonl";

/// Writes images, masks and the manifest under `out_dir`; returns the
/// manifest path.
pub fn gen_dataset(config: &SynthConfig, out_dir: impl AsRef<Path>) -> Result<PathBuf> {
    let out_dir = out_dir.as_ref();
    let dataset = gen_dataset_in_memory(config)?;
    ensure_dir(out_dir.join("images"))?;
    ensure_dir(out_dir.join("masks"))?;
    for (record, sample) in dataset.records.iter().zip(&dataset.samples) {
        write_image(&sample.image, out_dir.join(&record.image_path))?;
        write_mask(&sample.mask, out_dir.join(&record.occlusion_path))?;
    }
    let manifest = out_dir.join(MANIFEST_NAME);
    save_manifest(&dataset.records, &manifest)?;
    Ok(manifest)
}
