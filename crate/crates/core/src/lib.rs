//! Fuzzy-membership seeded region growing for 2D lesion segmentation.
//!
//! The pipeline runs in four stages, each in its own module:
//!
//! 1. [`preprocess`] smooths the slice with a truncated Gaussian kernel.
//! 2. [`seeds`] samples the region of interest, clusters the samples with
//!    k-means and keeps the centroids that sit on homogeneous tissue.
//! 3. [`growing`] grows one region per seed, admitting 8-connected
//!    neighbours whose Gaussian membership against the running region
//!    statistics reaches the fuzzy threshold, and unions the regions.
//! 4. [`morphology`] dilates the union with a larger kernel and erodes it
//!    with a smaller one.
//!
//! [`tuner`] wraps the pipeline in an exhaustive per-slice grid search and
//! [`report`] renders its results as CSV, a statistics table and an SVG
//! chart. [`phantom`] generates ground-truthed synthetic slices.
//!
//! With the default `parallel` feature the tuner and the separable
//! convolution run on rayon; without it the same code paths run serially
//! and produce identical results.

mod error;
mod image;
mod par;

pub mod growing;
pub mod io;
pub mod metrics;
pub mod morphology;
pub mod phantom;
pub mod preprocess;
pub mod report;
pub mod seeds;
pub mod tuner;

pub use error::{Error, Result};
pub use image::{BinaryMask, GrayImage, Pixel};
pub use par::Execution;
