//! Hand-crafted iris quality factors: sharpness, iris size, dilation, gray
//! level spread and usable area.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{IrisGeometry, OcclusionMask};
use crate::image::GrayImage;

/// Horizontal 3x3 Sobel kernel, row-major.
pub const SOBEL_X: [[f64; 3]; 3] = [[-1.0, 0.0, 1.0], [-2.0, 0.0, 2.0], [-1.0, 0.0, 1.0]];
/// Vertical 3x3 Sobel kernel (transpose of [`SOBEL_X`]).
pub const SOBEL_Y: [[f64; 3]; 3] = [[-1.0, -2.0, -1.0], [0.0, 0.0, 0.0], [1.0, 2.0, 1.0]];

/// The five factors of one image.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FactorReport {
    pub sharpness: f64,
    pub iris_size: f64,
    pub dilation: f64,
    pub gray_level_spread: f64,
    pub usable_area: f64,
}

/// Names a single factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Factor {
    Sharpness,
    IrisSize,
    Dilation,
    GrayLevelSpread,
    UsableArea,
}

impl Factor {
    pub const ALL: [Factor; 5] = [
        Factor::Sharpness,
        Factor::IrisSize,
        Factor::Dilation,
        Factor::GrayLevelSpread,
        Factor::UsableArea,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Factor::Sharpness => "sharpness",
            Factor::IrisSize => "iris_size",
            Factor::Dilation => "dilation",
            Factor::GrayLevelSpread => "gray_level_spread",
            Factor::UsableArea => "usable_area",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|f| f.name() == name)
    }
}

impl FactorReport {
    pub fn get(&self, factor: Factor) -> f64 {
        match factor {
            Factor::Sharpness => self.sharpness,
            Factor::IrisSize => self.iris_size,
            Factor::Dilation => self.dilation,
            Factor::GrayLevelSpread => self.gray_level_spread,
            Factor::UsableArea => self.usable_area,
        }
    }
}

/// Tenengrad sharpness: the mean Sobel gradient magnitude over all pixels,
/// with replicate padding at the border.
pub fn sharpness(image: &GrayImage) -> f64 {
    let (w, h) = (image.width(), image.height());
    let mut total = 0.0;
    for y in 0..h {
        let mut row = 0.0;
        for x in 0..w {
            let (mut gx, mut gy) = (0.0, 0.0);
            for (ky, (kx_row, ky_row)) in SOBEL_X.iter().zip(&SOBEL_Y).enumerate() {
                for kx in 0..3 {
                    let p =
                        f64::from(image.get_clamped(
                            x as isize + kx as isize - 1,
                            y as isize + ky as isize - 1,
                        ));
                    gx += kx_row[kx] * p;
                    gy += ky_row[kx] * p;
                }
            }
            row += (gx * gx + gy * gy).sqrt();
        }
        total += row;
    }
    total / (w * h) as f64
}

/// Iris radius in pixels.
pub fn iris_size(geometry: &IrisGeometry) -> f64 {
    geometry.iris_radius
}

/// Pupil-to-iris radius ratio.
pub fn dilation(geometry: &IrisGeometry) -> f64 {
    geometry.pupil_radius / geometry.iris_radius
}

/// 256-bin intensity histogram of the iris annulus.
pub fn annulus_histogram(image: &GrayImage, geometry: &IrisGeometry) -> [u64; 256] {
    let mut hist = [0u64; 256];
    for (x, y) in geometry.annulus_pixels(image.width(), image.height()) {
        hist[image.get(x, y) as usize] += 1;
    }
    hist
}

/// Shannon entropy (bits) of a histogram, with `0 log 0 = 0`.
pub fn entropy_bits(hist: &[u64]) -> Option<f64> {
    let n: u64 = hist.iter().sum();
    if n == 0 {
        return None;
    }
    let n = n as f64;
    let h = hist
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum::<f64>();
    // a single-bin histogram can come out as -0.0
    Some(h.max(0.0))
}

/// Gray level spread: entropy of the annulus intensities, in [0, 8] bits.
pub fn gray_level_spread(image: &GrayImage, geometry: &IrisGeometry) -> Result<f64> {
    entropy_bits(&annulus_histogram(image, geometry)).ok_or(Error::EmptyAnnulus)
}

/// Fraction of annulus pixels marked usable.
pub fn usable_area(mask: &OcclusionMask, geometry: &IrisGeometry) -> Result<f64> {
    let (mut usable, mut total) = (0usize, 0usize);
    for (x, y) in geometry.annulus_pixels(mask.width(), mask.height()) {
        total += 1;
        usable += usize::from(mask.get(x, y));
    }
    if total == 0 {
        return Err(Error::EmptyAnnulus);
    }
    Ok(usable as f64 / total as f64)
}

/// Computes all five factors.
pub fn factor_report(
    image: &GrayImage,
    geometry: &IrisGeometry,
    mask: &OcclusionMask,
) -> Result<FactorReport> {
    if (mask.width(), mask.height()) != (image.width(), image.height()) {
        return Err(Error::DimensionMismatch(format!(
            "mask {}x{} vs image {}x{}",
            mask.width(),
            mask.height(),
            image.width(),
            image.height()
        )));
    }
    Ok(FactorReport {
        sharpness: sharpness(image),
        iris_size: iris_size(geometry),
        dilation: dilation(geometry),
        gray_level_spread: gray_level_spread(image, geometry)?,
        usable_area: usable_area(mask, geometry)?,
    })
}
