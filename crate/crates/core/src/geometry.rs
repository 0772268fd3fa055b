//! Iris circle geometry and the usable-iris occlusion mask.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{read_image, write_image, GrayImage};

/// Pupil and iris circles, in pixel coordinates.
///
/// Pixel `(x, y)` has its center at `(x + 0.5, y + 0.5)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IrisGeometry {
    pub pupil_center: (f64, f64),
    pub pupil_radius: f64,
    pub iris_center: (f64, f64),
    pub iris_radius: f64,
}

impl IrisGeometry {
    pub fn new(
        pupil_center: (f64, f64),
        pupil_radius: f64,
        iris_center: (f64, f64),
        iris_radius: f64,
    ) -> Result<Self> {
        let g = Self {
            pupil_center,
            pupil_radius,
            iris_center,
            iris_radius,
        };
        g.validate()?;
        Ok(g)
    }

    /// Concentric pupil and iris circles.
    pub fn concentric(center: (f64, f64), pupil_radius: f64, iris_radius: f64) -> Result<Self> {
        Self::new(center, pupil_radius, center, iris_radius)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.pupil_center.0,
            self.pupil_center.1,
            self.pupil_radius,
            self.iris_center.0,
            self.iris_center.1,
            self.iris_radius,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidGeometry("non-finite parameter".into()));
        }
        if self.pupil_radius <= 0.0 || self.iris_radius <= 0.0 {
            return Err(Error::InvalidGeometry("radii must be positive".into()));
        }
        if self.pupil_radius >= self.iris_radius {
            return Err(Error::InvalidGeometry(format!(
                "pupil radius {} is not smaller than iris radius {}",
                self.pupil_radius, self.iris_radius
            )));
        }
        Ok(())
    }

    /// Checks that both circles fit inside a `width`x`height` image.
    pub fn validate_within(&self, width: usize, height: usize) -> Result<()> {
        self.validate()?;
        let fits = |(cx, cy): (f64, f64), r: f64| {
            cx - r >= 0.0 && cy - r >= 0.0 && cx + r <= width as f64 && cy + r <= height as f64
        };
        if !fits(self.iris_center, self.iris_radius) || !fits(self.pupil_center, self.pupil_radius)
        {
            return Err(Error::InvalidGeometry(format!(
                "circles exceed the {width}x{height} image bounds"
            )));
        }
        Ok(())
    }

    /// Annulus membership of pixel `(x, y)`: the distance from its center to
    /// the iris center lies in `[pupil_radius, iris_radius)`.
    #[inline]
    pub fn in_annulus(&self, x: usize, y: usize) -> bool {
        let dx = x as f64 + 0.5 - self.iris_center.0;
        let dy = y as f64 + 0.5 - self.iris_center.1;
        let d = (dx * dx + dy * dy).sqrt();
        d >= self.pupil_radius && d < self.iris_radius
    }

    /// Iterator over annulus pixels of a `width`x`height` raster, row-major.
    pub fn annulus_pixels(
        &self,
        width: usize,
        height: usize,
    ) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..height)
            .flat_map(move |y| (0..width).map(move |x| (x, y)))
            .filter(|&(x, y)| self.in_annulus(x, y))
    }

    /// Multiplies every coordinate and radius by `k`.
    pub fn scaled(&self, k: f64) -> Result<Self> {
        Self::new(
            (self.pupil_center.0 * k, self.pupil_center.1 * k),
            self.pupil_radius * k,
            (self.iris_center.0 * k, self.iris_center.1 * k),
            self.iris_radius * k,
        )
    }
}

/// Binary map of usable iris pixels (`true` = usable).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OcclusionMask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl OcclusionMask {
    pub fn new(width: usize, height: usize, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != width * height {
            return Err(Error::DimensionMismatch(format!(
                "{} mask bits for a {width}x{height} mask",
                bits.len()
            )));
        }
        Ok(Self {
            width,
            height,
            bits,
        })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut bits = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                bits.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            bits,
        }
    }

    /// Mask with every annulus pixel usable.
    pub fn full_annulus(width: usize, height: usize, geometry: &IrisGeometry) -> Self {
        Self::from_fn(width, height, |x, y| geometry.in_annulus(x, y))
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, value: bool) {
        self.bits[y * self.width + x] = value;
    }

    /// Every usable bit must lie inside the annulus of `geometry`.
    pub fn validate_against(&self, geometry: &IrisGeometry) -> Result<()> {
        for y in 0..self.height {
            for x in 0..self.width {
                if self.get(x, y) && !geometry.in_annulus(x, y) {
                    return Err(Error::InvalidGeometry(format!(
                        "mask marks ({x}, {y}) usable outside the iris annulus"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Encodes as a graymap with values {0, 255}.
    pub fn to_image(&self) -> Result<GrayImage> {
        GrayImage::new(
            self.width,
            self.height,
            self.bits.iter().map(|&b| if b { 255 } else { 0 }).collect(),
        )
    }

    /// Decodes a graymap; values above 127 are usable.
    pub fn from_image(image: &GrayImage) -> Self {
        Self {
            width: image.width(),
            height: image.height(),
            bits: image.pixels().iter().map(|&p| p > 127).collect(),
        }
    }
}

pub fn read_mask(path: impl AsRef<Path>) -> Result<OcclusionMask> {
    Ok(OcclusionMask::from_image(&read_image(path)?))
}

pub fn write_mask(mask: &OcclusionMask, path: impl AsRef<Path>) -> Result<()> {
    write_image(&mask.to_image()?, path)
}
