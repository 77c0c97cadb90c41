//! Input discovery and loading for the tuner, plus output directory checks.

use std::fs;
use std::path::{Path, PathBuf};

use fisrg::io::{extract_slice, load_gray, load_mask, load_volume, Volume};
use fisrg::phantom::tuning_slices;
use fisrg::tuner::SliceInput;
use fisrg::BinaryMask;

use crate::config::{RoiPolicy, RunConfig};
use crate::error::{usage, CliError, CliResult};

const IMAGE_EXTS: [&str; 2] = ["pgm", "png"];

pub fn require_exists(what: &str, path: &Path) -> CliResult<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(CliError::Io(format!(
            "{what} not found: {}",
            path.display()
        )))
    }
}

/// Creates `dir` if needed and proves it accepts new files.
pub fn prepare_out_dir(dir: &Path) -> CliResult<()> {
    let fail = |e: std::io::Error| {
        CliError::Io(format!(
            "output directory {} is not writable: {e}",
            dir.display()
        ))
    };
    fs::create_dir_all(dir).map_err(fail)?;
    tempfile::Builder::new()
        .prefix(".fisrg-probe")
        .tempfile_in(dir)
        .map(drop)
        .map_err(fail)
}

pub fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> CliResult<()> {
    fs::write(path, contents).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn is_volume(path: &Path) -> bool {
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("");
    name.ends_with(".nii") || name.ends_with(".nii.gz")
}

/// Where tuning slices come from.
#[derive(Debug, Clone, PartialEq)]
pub enum Source {
    Corpus,
    Directory {
        images: PathBuf,
        masks: PathBuf,
        rois: Option<PathBuf>,
    },
    Volume {
        image: PathBuf,
        gt: PathBuf,
        roi: Option<PathBuf>,
    },
}

/// Resolves and checks every input path without reading any pixels.
pub fn resolve_source(cfg: &RunConfig) -> CliResult<Source> {
    let roi = match cfg.roi_policy {
        RoiPolicy::ProvidedMask => cfg.roi.clone(),
        RoiPolicy::DilatedGt => None,
    };
    let Some(input) = &cfg.input else {
        if roi.is_some() || cfg.gt.is_some() {
            return usage("--gt and --roi need --input");
        }
        return Ok(Source::Corpus);
    };
    require_exists("input", input)?;
    if input.is_dir() {
        let images = input.join("images");
        let masks = cfg.gt.clone().unwrap_or_else(|| input.join("masks"));
        require_exists("image directory", &images)?;
        require_exists("mask directory", &masks)?;
        if let Some(r) = &roi {
            require_exists("ROI directory", r)?;
        }
        Ok(Source::Directory {
            images,
            masks,
            rois: roi,
        })
    } else if is_volume(input) {
        let Some(gt) = cfg.gt.clone() else {
            return usage("a NIfTI input needs --gt");
        };
        require_exists("ground truth", &gt)?;
        if let Some(r) = &roi {
            require_exists("ROI", r)?;
        }
        Ok(Source::Volume {
            image: input.clone(),
            gt,
            roi,
        })
    } else {
        usage(format!(
            "input {} is neither a slice directory nor a .nii/.nii.gz volume",
            input.display()
        ))
    }
}

fn list_images(dir: &Path) -> CliResult<Vec<PathBuf>> {
    let entries = fs::read_dir(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    let mut files = Vec::new();
    for entry in entries {
        let path = entry
            .map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?
            .path();
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase);
        if path.is_file() && ext.is_some_and(|e| IMAGE_EXTS.contains(&e.as_str())) {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

fn companion(dir: &Path, image: &Path, what: &str) -> CliResult<PathBuf> {
    let path = dir.join(image.file_name().expect("listed files have names"));
    require_exists(what, &path)?;
    Ok(path)
}

fn plane_mask(vol: &Volume, axis: usize, index: usize) -> CliResult<BinaryMask> {
    let (w, h, data) = vol.plane(axis, index)?;
    Ok(BinaryMask::new(
        w,
        h,
        data.iter().map(|&v| v > 0.0).collect(),
    )?)
}

fn check_range(len: usize, cfg: &RunConfig) -> CliResult<std::ops::Range<usize>> {
    match cfg.slices {
        Some(r) if r.end > len => usage(format!(
            "slice range {r} exceeds the {len} available slices"
        )),
        Some(r) => Ok(r.start..r.end),
        None => Ok(0..len),
    }
}

/// Loads every tuning slice. Without an explicit range, volume slices whose
/// ground truth is empty are skipped.
pub fn load_slices(cfg: &RunConfig, source: &Source) -> CliResult<Vec<SliceInput>> {
    let slices = match source {
        Source::Corpus => tuning_slices(&cfg.corpus.specs())?,
        Source::Directory {
            images,
            masks,
            rois,
        } => {
            let files = list_images(images)?;
            if files.is_empty() {
                return Err(CliError::Io(format!(
                    "no .pgm or .png images in {}",
                    images.display()
                )));
            }
            let mut out = Vec::new();
            for index in check_range(files.len(), cfg)? {
                let file = &files[index];
                let image = load_gray(file)?;
                let gt = load_mask(companion(masks, file, "ground-truth mask")?)?;
                out.push(match rois {
                    Some(dir) => SliceInput {
                        index,
                        image,
                        gt,
                        roi: load_mask(companion(dir, file, "ROI mask")?)?,
                    },
                    None => SliceInput::with_dilated_roi(index, image, gt),
                });
            }
            out
        }
        Source::Volume { image, gt, roi } => {
            let vol = load_volume(image)?;
            let gt_vol = load_volume(gt)?;
            let roi_vol = roi.as_ref().map(load_volume).transpose()?;
            for (what, v) in std::iter::once(("ground truth", &gt_vol))
                .chain(roi_vol.as_ref().map(|v| ("ROI", v)))
            {
                if v.dims() != vol.dims() {
                    return Err(CliError::Io(format!(
                        "{what} volume is {:?} but the image volume is {:?}",
                        v.dims(),
                        vol.dims()
                    )));
                }
            }
            let len = vol.dims()[cfg.axis];
            let explicit = cfg.slices.is_some();
            let mut out = Vec::new();
            for index in check_range(len, cfg)? {
                let gt = plane_mask(&gt_vol, cfg.axis, index)?;
                if !explicit && gt.is_empty() {
                    continue;
                }
                let img = extract_slice(&vol, cfg.axis, index)?;
                out.push(match &roi_vol {
                    Some(r) => SliceInput {
                        index,
                        image: img,
                        gt,
                        roi: plane_mask(r, cfg.axis, index)?,
                    },
                    None => SliceInput::with_dilated_roi(index, img, gt),
                });
            }
            if out.is_empty() {
                return Err(CliError::Compute(format!(
                    "ground truth {} has no lesion voxels along axis {}",
                    gt.display(),
                    cfg.axis
                )));
            }
            out
        }
    };
    Ok(slices)
}
