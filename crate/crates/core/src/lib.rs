//! Recognition-oriented iris image quality assessment.

pub mod dfs;
pub mod embedding;
pub mod error;
pub mod evaluation;
pub mod factors;
pub mod fsutil;
pub mod geometry;
pub mod image;
pub mod manifest;
pub mod predictor;
pub mod quality;
pub mod synth;

pub use embedding::Embedding;
pub use error::{Error, ErrorKind, Result};
pub use geometry::{IrisGeometry, OcclusionMask};
pub use image::{read_image, write_image, FeatureMap, GrayImage, RealGrid};
pub use manifest::{load_manifest, save_manifest, SampleRecord};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/factors.md")]
    mod factors {}
    #[doc = include_str!("../../../book/src/labels.md")]
    mod labels {}
    #[doc = include_str!("../../../book/src/pooling.md")]
    mod pooling {}
    #[doc = include_str!("../../../book/src/training.md")]
    mod training {}
    #[doc = include_str!("../../../book/src/evaluation.md")]
    mod evaluation {}
    #[doc = include_str!("../../../book/src/synthetic.md")]
    mod synthetic {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
