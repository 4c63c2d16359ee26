//! Spatial pooling of image quality maps and evaluation of pooled scores
//! against subjective ratings.
//!
//! The crate is organized by stage:
//!
//! * [`attributes`] turns a reference/distorted pair into per-pixel maps
//!   (squared error, SSIM) and information-content weights.
//! * [`pooling`] reduces a map to a scalar under each pooling strategy,
//!   including weighted percentile pooling.
//! * [`stats`] fits a monotonic logistic, computes Pearson/Spearman
//!   correlations and tests correlation differences for significance.
//! * [`dataset`] reads manifests and images and caches pooled scores.
//! * [`bench`] runs the whole study and writes report files.
//! * [`synth`] generates a small synthetic dataset with graded distortions.

pub mod attributes;
pub mod bench;
pub mod dataset;
pub mod error;
pub mod pooling;
pub mod stats;
pub mod synth;

pub use attributes::{AttributeMap, GrayImage, InfoWeightConfig, Polarity, WindowConfig};
pub use error::{Error, Result};
pub use pooling::{PooledScore, PoolingFamily, PoolingSpec};
