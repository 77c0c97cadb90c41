//! File formats: NIfTI-1 volumes in, 8-bit PGM/PNG rasters in and out.

pub mod nifti;
pub mod raster;

pub use nifti::{extract_slice, load_volume, Volume};
pub use raster::{load_gray, load_mask, save_gray, save_mask};
