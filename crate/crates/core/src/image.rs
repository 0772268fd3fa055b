//! Raster containers and binary graymap (P5) I/O.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// Smallest accepted image side, in pixels.
pub const MIN_SIDE: usize = 8;

/// 8-bit single-channel image stored row-major.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        if width < MIN_SIDE || height < MIN_SIDE {
            return Err(Error::InvalidImage(format!(
                "{width}x{height} is smaller than the {MIN_SIDE}x{MIN_SIDE} minimum"
            )));
        }
        if pixels.len() != width * height {
            return Err(Error::InvalidImage(format!(
                "{} pixels for a {width}x{height} image",
                pixels.len()
            )));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    /// Builds an image by evaluating `f(x, y)` at every pixel.
    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> u8,
    ) -> Result<Self> {
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        Self::new(width, height, pixels)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }

    /// Pixel lookup with coordinates clamped to the border (replicate padding).
    #[inline]
    pub fn get_clamped(&self, x: isize, y: isize) -> u8 {
        let x = x.clamp(0, self.width as isize - 1) as usize;
        let y = y.clamp(0, self.height as isize - 1) as usize;
        self.get(x, y)
    }

    /// Binary P5 encoding: `P5\n<w> <h>\n255\n` followed by the raw bytes.
    pub fn to_pgm_bytes(&self) -> Vec<u8> {
        let header = format!("P5\n{} {}\n255\n", self.width, self.height);
        let mut out = Vec::with_capacity(header.len() + self.pixels.len());
        out.extend_from_slice(header.as_bytes());
        out.extend_from_slice(&self.pixels);
        out
    }

    pub fn from_pgm_bytes(bytes: &[u8]) -> Result<Self> {
        let mut cursor = HeaderCursor { bytes, pos: 0 };
        if bytes.len() < 2 || &bytes[..2] != b"P5" {
            return Err(Error::MalformedHeader("missing P5 magic".into()));
        }
        cursor.pos = 2;
        let width = cursor.next_number("width")?;
        let height = cursor.next_number("height")?;
        let maxval = cursor.next_number("maxval")?;
        // exactly one whitespace byte separates the header from the raster
        match bytes.get(cursor.pos) {
            Some(b) if b.is_ascii_whitespace() => cursor.pos += 1,
            _ => return Err(Error::MalformedHeader("no whitespace after maxval".into())),
        }
        if maxval != 255 {
            return Err(Error::UnsupportedMaxval(maxval));
        }
        let (width, height) = (width as usize, height as usize);
        let expected = width
            .checked_mul(height)
            .ok_or_else(|| Error::MalformedHeader("dimensions overflow".into()))?;
        let payload = &bytes[cursor.pos..];
        if payload.len() < expected {
            return Err(Error::Truncated {
                expected,
                found: payload.len(),
            });
        }
        Self::new(width, height, payload[..expected].to_vec())
    }
}

struct HeaderCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl HeaderCursor<'_> {
    fn skip_whitespace_and_comments(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b.is_ascii_whitespace() {
                self.pos += 1;
            } else if b == b'#' {
                while let Some(&c) = self.bytes.get(self.pos) {
                    self.pos += 1;
                    if c == b'\n' || c == b'\r' {
                        break;
                    }
                }
            } else {
                break;
            }
        }
    }

    fn next_number(&mut self, what: &str) -> Result<u32> {
        let start_before_ws = self.pos;
        self.skip_whitespace_and_comments();
        if self.pos == start_before_ws {
            return Err(Error::MalformedHeader(format!(
                "expected whitespace before {what}"
            )));
        }
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::MalformedHeader(format!("expected {what}")));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::MalformedHeader(format!("{what} out of range")))
    }
}

/// Reads a binary P5 graymap with maxval 255.
pub fn read_image(path: impl AsRef<Path>) -> Result<GrayImage> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    GrayImage::from_pgm_bytes(&bytes)
}

/// Writes `image` as a binary P5 graymap.
pub fn write_image(image: &GrayImage, path: impl AsRef<Path>) -> Result<()> {
    crate::fsutil::write_atomic(path, &image.to_pgm_bytes())
}

/// Row-major grid of finite reals.
#[derive(Debug, Clone, PartialEq)]
pub struct RealGrid {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl RealGrid {
    pub fn new(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != width * height {
            return Err(Error::DimensionMismatch(format!(
                "{} values for a {width}x{height} grid",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("grid contains a non-finite value".into()));
        }
        Ok(Self {
            width,
            height,
            values,
        })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Returns a copy with every value multiplied by `k`.
    pub fn scaled(&self, k: f64) -> Result<Self> {
        Self::new(
            self.width,
            self.height,
            self.values.iter().map(|v| v * k).collect(),
        )
    }
}

/// Dense feature tensor laid out as `(height, width, channels)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    width: usize,
    height: usize,
    channels: usize,
    values: Vec<f64>,
}

impl FeatureMap {
    pub fn new(width: usize, height: usize, channels: usize, values: Vec<f64>) -> Result<Self> {
        if channels == 0 {
            return Err(Error::DimensionMismatch(
                "feature map needs at least one channel".into(),
            ));
        }
        if values.len() != width * height * channels {
            return Err(Error::DimensionMismatch(format!(
                "{} values for a {width}x{height}x{channels} feature map",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(
                "feature map contains a non-finite value".into(),
            ));
        }
        Ok(Self {
            width,
            height,
            channels,
            values,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, z: usize) -> f64 {
        self.values[(y * self.width + x) * self.channels + z]
    }

    /// Channel vector at spatial cell `(x, y)`.
    pub fn cell(&self, x: usize, y: usize) -> &[f64] {
        let start = (y * self.width + x) * self.channels;
        &self.values[start..start + self.channels]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_all_zero_8x8() {
        let mut bytes = b"P5\n8 8\n255\n".to_vec();
        bytes.extend(std::iter::repeat_n(0u8, 64));
        let img = GrayImage::from_pgm_bytes(&bytes).unwrap();
        assert_eq!((img.width(), img.height()), (8, 8));
        assert!(img.pixels().iter().all(|&p| p == 0));
    }

    #[test]
    fn truncated_payload_is_reported() {
        let mut bytes = b"P5\n640 480\n255\n".to_vec();
        bytes.extend([1u8; 10]);
        match GrayImage::from_pgm_bytes(&bytes) {
            Err(Error::Truncated { expected, found }) => {
                assert_eq!(expected, 640 * 480);
                assert_eq!(found, 10);
            }
            other => panic!("expected truncation, got {other:?}"),
        }
    }

    #[test]
    fn header_errors_are_distinct() {
        assert!(matches!(
            GrayImage::from_pgm_bytes(b"P2\n8 8\n255\n"),
            Err(Error::MalformedHeader(_))
        ));
        assert!(matches!(
            GrayImage::from_pgm_bytes(b"P5\n8 x\n255\n"),
            Err(Error::MalformedHeader(_))
        ));
        let mut bytes = b"P5\n8 8\n65535\n".to_vec();
        bytes.extend([0u8; 128]);
        assert!(matches!(
            GrayImage::from_pgm_bytes(&bytes),
            Err(Error::UnsupportedMaxval(65535))
        ));
    }

    #[test]
    fn header_comments_are_skipped() {
        let mut bytes = b"P5\n# made by hand\n8 8\n255\n".to_vec();
        bytes.extend([9u8; 64]);
        let img = GrayImage::from_pgm_bytes(&bytes).unwrap();
        assert_eq!(img.get(7, 7), 9);
    }

    #[test]
    fn encodes_2x2_payload_directly() {
        // the 8x8 minimum does not apply to the raw encoder, so build by hand
        let img = GrayImage {
            width: 2,
            height: 2,
            pixels: vec![0, 255, 128, 7],
        };
        let bytes = img.to_pgm_bytes();
        assert_eq!(&bytes[bytes.len() - 4..], &[0x00, 0xFF, 0x80, 0x07]);
        assert!(bytes.starts_with(b"P5\n2 2\n255\n"));
    }

    #[test]
    fn missing_file_is_distinct_from_io() {
        let err = read_image("/definitely/not/here.pgm").unwrap_err();
        assert!(matches!(err, Error::MissingFile(_)));
    }

    #[test]
    fn rejects_small_or_mismatched_images() {
        assert!(GrayImage::new(7, 8, vec![0; 56]).is_err());
        assert!(GrayImage::new(8, 8, vec![0; 63]).is_err());
    }

    #[test]
    fn grids_reject_non_finite() {
        assert!(RealGrid::new(1, 1, vec![f64::NAN]).is_err());
        assert!(FeatureMap::new(1, 1, 1, vec![f64::INFINITY]).is_err());
        assert!(FeatureMap::new(1, 1, 0, vec![]).is_err());
    }
}
