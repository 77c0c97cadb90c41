//! Exhaustive per-slice grid search over the pipeline parameters.
//!
//! Three nested experiments free progressively more parameters:
//!
//! | experiment | free parameters                                   |
//! |------------|---------------------------------------------------|
//! | 1          | fuzzy threshold, seed count                       |
//! | 2          | + denoising sigma                                 |
//! | 3          | + dilation size                                   |
//!
//! Every evaluation of a parameter point on a slice uses the same derived
//! RNG seed, so a point scores identically in every experiment whose grid
//! contains it. Work is split into (slice, sigma, seed count) groups that
//! share one denoised image and one seed set; results land in slots keyed
//! by grid index and are reduced serially, so scheduling never changes
//! the outcome.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::growing::{fisrg, GrowParams};
use crate::metrics::{dice, lesion_percentage, EvalRecord};
use crate::morphology::{dilate, postprocess, SeShape, StructuringElement};
use crate::par::{map_ordered, Execution};
use crate::preprocess::denoise_with;
use crate::seeds::{select_seeds, SeedCriteria, SeedSet};
use crate::{BinaryMask, Error, GrayImage, Result};

/// Radius of the disk used to derive a seeding ROI from ground truth.
pub const ROI_DILATION_RADIUS: usize = 15;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ParamPoint {
    pub fuzzy_threshold: f64,
    pub n_seeds: usize,
    pub denoise_sigma: f64,
    pub dilate_size: usize,
}

impl Default for ParamPoint {
    fn default() -> Self {
        ParamPoint {
            fuzzy_threshold: 0.5,
            n_seeds: 4,
            denoise_sigma: 1.0,
            dilate_size: 5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Param {
    FuzzyThreshold,
    NSeeds,
    DenoiseSigma,
    DilateSize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Experiment {
    One,
    Two,
    Three,
}

impl Experiment {
    pub fn id(self) -> u8 {
        match self {
            Experiment::One => 1,
            Experiment::Two => 2,
            Experiment::Three => 3,
        }
    }

    pub fn free_params(self) -> &'static [Param] {
        use Param::*;
        match self {
            Experiment::One => &[FuzzyThreshold, NSeeds],
            Experiment::Two => &[FuzzyThreshold, NSeeds, DenoiseSigma],
            Experiment::Three => &[FuzzyThreshold, NSeeds, DenoiseSigma, DilateSize],
        }
    }

    pub fn is_free(self, p: Param) -> bool {
        self.free_params().contains(&p)
    }
}

impl TryFrom<u8> for Experiment {
    type Error = String;

    fn try_from(v: u8) -> std::result::Result<Self, String> {
        match v {
            1 => Ok(Experiment::One),
            2 => Ok(Experiment::Two),
            3 => Ok(Experiment::Three),
            _ => Err(format!("experiment must be 1, 2 or 3, got {v}")),
        }
    }
}

impl From<Experiment> for u8 {
    fn from(e: Experiment) -> u8 {
        e.id()
    }
}

/// Candidate values per parameter, searched in the listed order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Grid {
    pub fuzzy_threshold: Vec<f64>,
    pub n_seeds: Vec<usize>,
    pub denoise_sigma: Vec<f64>,
    pub dilate_size: Vec<usize>,
}

impl Default for Grid {
    fn default() -> Self {
        Grid {
            fuzzy_threshold: vec![
                0.1, 0.112, 0.15, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.829, 0.9, 1.0,
            ],
            n_seeds: (2..=11).collect(),
            denoise_sigma: vec![0.5, 1.0, 1.5, 2.0],
            dilate_size: vec![3, 5, 7, 9],
        }
    }
}

impl Grid {
    pub fn singleton(p: ParamPoint) -> Self {
        Grid {
            fuzzy_threshold: vec![p.fuzzy_threshold],
            n_seeds: vec![p.n_seeds],
            denoise_sigma: vec![p.denoise_sigma],
            dilate_size: vec![p.dilate_size],
        }
    }

    pub fn len(&self) -> usize {
        self.fuzzy_threshold.len()
            * self.n_seeds.len()
            * self.denoise_sigma.len()
            * self.dilate_size.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Point at lexicographic index `i` (threshold slowest, dilation fastest).
    pub fn point(&self, i: usize) -> ParamPoint {
        let nd = self.dilate_size.len();
        let ns = self.denoise_sigma.len();
        let nk = self.n_seeds.len();
        ParamPoint {
            fuzzy_threshold: self.fuzzy_threshold[i / (nd * ns * nk)],
            n_seeds: self.n_seeds[(i / (nd * ns)) % nk],
            denoise_sigma: self.denoise_sigma[(i / nd) % ns],
            dilate_size: self.dilate_size[i % nd],
        }
    }

    fn index(&self, t: usize, k: usize, s: usize, d: usize) -> usize {
        ((t * self.n_seeds.len() + k) * self.denoise_sigma.len() + s) * self.dilate_size.len() + d
    }

    pub fn points(&self) -> impl Iterator<Item = ParamPoint> + '_ {
        (0..self.len()).map(|i| self.point(i))
    }
}

/// Fixed pipeline settings that no experiment tunes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineSettings {
    pub seeds: SeedCriteria,
    pub sigma_floor: f64,
    pub erode_size: usize,
    pub se_shape: SeShape,
}

impl Default for PipelineSettings {
    fn default() -> Self {
        PipelineSettings {
            seeds: SeedCriteria::default(),
            sigma_floor: GrowParams::default().sigma_floor,
            erode_size: 3,
            se_shape: SeShape::Square,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    /// Values for parameters the experiment does not free.
    #[serde(default)]
    pub fixed_defaults: ParamPoint,
    /// Candidate lists; lists for non-free parameters are ignored.
    #[serde(default)]
    pub grid: Grid,
    pub rng_seed: u64,
    #[serde(default)]
    pub pipeline: PipelineSettings,
}

impl ExperimentConfig {
    pub fn new(experiment: Experiment, rng_seed: u64) -> Self {
        ExperimentConfig {
            experiment,
            fixed_defaults: ParamPoint::default(),
            grid: Grid::default(),
            rng_seed,
            pipeline: PipelineSettings::default(),
        }
    }

    /// The grid actually searched: free lists as given, fixed defaults
    /// elsewhere.
    pub fn effective_grid(&self) -> Grid {
        let e = self.experiment;
        let d = self.fixed_defaults;
        Grid {
            fuzzy_threshold: if e.is_free(Param::FuzzyThreshold) {
                self.grid.fuzzy_threshold.clone()
            } else {
                vec![d.fuzzy_threshold]
            },
            n_seeds: if e.is_free(Param::NSeeds) {
                self.grid.n_seeds.clone()
            } else {
                vec![d.n_seeds]
            },
            denoise_sigma: if e.is_free(Param::DenoiseSigma) {
                self.grid.denoise_sigma.clone()
            } else {
                vec![d.denoise_sigma]
            },
            dilate_size: if e.is_free(Param::DilateSize) {
                self.grid.dilate_size.clone()
            } else {
                vec![d.dilate_size]
            },
        }
    }

    /// Checks the effective grid and pipeline settings without running.
    pub fn validate(&self) -> Result<()> {
        self.validate_grid(&self.effective_grid())
    }

    fn validate_grid(&self, grid: &Grid) -> Result<()> {
        if grid.is_empty() {
            return Err(Error::EmptyGrid);
        }
        let bad = |m: String| Err(Error::InvalidParameter(m));
        for &t in &grid.fuzzy_threshold {
            if !(t > 0.0 && t <= 1.0) {
                return bad(format!("fuzzy threshold {t} not in (0, 1]"));
            }
        }
        if grid.n_seeds.contains(&0) {
            return bad("seed count must be at least 1".into());
        }
        for &s in &grid.denoise_sigma {
            if !(s >= 0.0 && s.is_finite()) {
                return bad(format!("denoise sigma {s} must be non-negative"));
            }
        }
        for &d in &grid.dilate_size {
            StructuringElement::new(self.pipeline.se_shape, d)?;
            if d < self.pipeline.erode_size {
                return Err(Error::KernelOrderViolation {
                    dilate: d,
                    erode: self.pipeline.erode_size,
                });
            }
        }
        StructuringElement::new(self.pipeline.se_shape, self.pipeline.erode_size)?;
        Ok(())
    }
}

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Per-slice RNG seed derived from the experiment seed and slice index.
pub fn slice_seed(rng_seed: u64, slice_index: usize) -> u64 {
    mix(rng_seed ^ mix((slice_index as u64).wrapping_add(0x9e37_79b9_7f4a_7c15)))
}

/// Seeding ROI: ground truth dilated by a disk of radius 15.
pub fn roi_from_ground_truth(gt: &BinaryMask) -> BinaryMask {
    let se = StructuringElement::disk(2 * ROI_DILATION_RADIUS + 1).expect("odd size");
    dilate(gt, &se)
}

/// Seeds for one (image, ROI, k); `None` when no seed could be placed.
fn seeds_or_none(
    img: &GrayImage,
    roi: &BinaryMask,
    k: usize,
    crit: &SeedCriteria,
    rng_seed: u64,
) -> Result<Option<SeedSet>> {
    match select_seeds(img, roi, k, crit, rng_seed) {
        Ok(s) => Ok(Some(s)),
        Err(Error::NoValidSeeds | Error::EmptyRoi) => Ok(None),
        Err(e) => Err(e),
    }
}

fn check_shapes(img: &GrayImage, gt: &BinaryMask, roi: &BinaryMask) -> Result<()> {
    if !img.same_shape(gt) || !img.same_shape(roi) {
        return Err(Error::dims(
            format!("{}x{} masks", img.width(), img.height()),
            format!(
                "gt {}x{}, roi {}x{}",
                gt.width(),
                gt.height(),
                roi.width(),
                roi.height()
            ),
        ));
    }
    Ok(())
}

/// Output of one pipeline run.
#[derive(Debug, Clone, PartialEq)]
pub struct Segmentation {
    pub seeds: Option<SeedSet>,
    /// Region-growing union before morphology.
    pub grown: BinaryMask,
    pub mask: BinaryMask,
}

/// Runs denoise, seed selection, growing and postprocessing at `p`.
/// When no seed can be placed the prediction is empty.
pub fn segment(
    img: &GrayImage,
    roi: &BinaryMask,
    p: &ParamPoint,
    settings: &PipelineSettings,
    rng_seed: u64,
) -> Result<Segmentation> {
    if !img.same_shape(roi) {
        return Err(Error::dims(
            format!("{}x{}", img.width(), img.height()),
            format!("{}x{}", roi.width(), roi.height()),
        ));
    }
    let smooth = denoise_with(img, p.denoise_sigma, Execution::Serial);
    let seeds = seeds_or_none(&smooth, roi, p.n_seeds, &settings.seeds, rng_seed)?;
    let grow = GrowParams {
        fuzzy_threshold: p.fuzzy_threshold,
        sigma_floor: settings.sigma_floor,
    };
    let (grown, mask) = match &seeds {
        Some(s) => {
            let grown = fisrg(&smooth, s, &grow)?;
            let mask = postprocess(
                &grown,
                p.dilate_size,
                settings.erode_size,
                settings.se_shape,
            )?;
            (grown, mask)
        }
        None => {
            grow.validate()?;
            let empty = BinaryMask::empty(img.width(), img.height());
            (empty.clone(), empty)
        }
    };
    Ok(Segmentation { seeds, grown, mask })
}

/// Scores the pipeline at `p` against `gt`.
pub fn evaluate(
    img: &GrayImage,
    gt: &BinaryMask,
    roi: &BinaryMask,
    p: &ParamPoint,
    settings: &PipelineSettings,
    rng_seed: u64,
) -> Result<EvalRecord> {
    check_shapes(img, gt, roi)?;
    let start = Instant::now();
    let seg = segment(img, roi, p, settings, rng_seed)?;
    let d = dice(&seg.mask, gt)?;
    Ok(EvalRecord {
        dice: d,
        lesion_pct: lesion_percentage(gt),
        elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}

/// One slice of a tuning corpus.
#[derive(Debug, Clone)]
pub struct SliceInput {
    pub index: usize,
    pub image: GrayImage,
    pub gt: BinaryMask,
    pub roi: BinaryMask,
}

impl SliceInput {
    /// Uses the ground truth dilated by [`ROI_DILATION_RADIUS`] as ROI.
    pub fn with_dilated_roi(index: usize, image: GrayImage, gt: BinaryMask) -> Self {
        let roi = roi_from_ground_truth(&gt);
        SliceInput {
            index,
            image,
            gt,
            roi,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceResult {
    pub slice_index: usize,
    pub best: ParamPoint,
    pub dice: f64,
    pub lesion_pct: f64,
    /// Compute time spent on this slice, summed over workers.
    pub elapsed_ms: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

impl Stat {
    /// Mean, sample std (n - 1; zero for a single value), min and max.
    pub fn of(values: &[f64]) -> Option<Stat> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Some(Stat {
            mean: mean.clamp(min, max),
            std,
            min,
            max,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub experiment: Experiment,
    pub slices: usize,
    pub fuzzy_threshold: Stat,
    pub n_seeds: Stat,
    pub dice: Stat,
    pub total_elapsed_min: f64,
}

impl ExperimentSummary {
    pub fn from_results(
        experiment: Experiment,
        results: &[SliceResult],
        total_elapsed_min: f64,
    ) -> Option<Self> {
        let col = |f: fn(&SliceResult) -> f64| results.iter().map(f).collect::<Vec<_>>();
        Some(ExperimentSummary {
            experiment,
            slices: results.len(),
            fuzzy_threshold: Stat::of(&col(|r| r.best.fuzzy_threshold))?,
            n_seeds: Stat::of(&col(|r| r.best.n_seeds as f64))?,
            dice: Stat::of(&col(|r| r.dice))?,
            total_elapsed_min,
        })
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentRun {
    pub results: Vec<SliceResult>,
    pub summary: ExperimentSummary,
}

/// Dice for every grid point in one (slice, sigma, seed count) group.
struct GroupScores {
    slice: usize,
    scores: Vec<(usize, f64)>,
    elapsed_ms: f64,
}

fn score_group(
    slice_pos: usize,
    input: &SliceInput,
    smooth: &GrayImage,
    grid: &Grid,
    (si, ki): (usize, usize),
    cfg: &ExperimentConfig,
) -> Result<GroupScores> {
    let start = Instant::now();
    let settings = &cfg.pipeline;
    let seed = slice_seed(cfg.rng_seed, input.index);
    let seeds = seeds_or_none(smooth, &input.roi, grid.n_seeds[ki], &settings.seeds, seed)?;
    let empty = BinaryMask::empty(smooth.width(), smooth.height());
    let mut scores = Vec::with_capacity(grid.fuzzy_threshold.len() * grid.dilate_size.len());
    for (ti, &t) in grid.fuzzy_threshold.iter().enumerate() {
        let grow = GrowParams {
            fuzzy_threshold: t,
            sigma_floor: settings.sigma_floor,
        };
        let grown = match &seeds {
            Some(s) => Some(fisrg(smooth, s, &grow)?),
            None => None,
        };
        for (di, &d) in grid.dilate_size.iter().enumerate() {
            let pred = match &grown {
                Some(g) => postprocess(g, d, settings.erode_size, settings.se_shape)?,
                None => empty.clone(),
            };
            scores.push((grid.index(ti, ki, si, di), dice(&pred, &input.gt)?));
        }
    }
    Ok(GroupScores {
        slice: slice_pos,
        scores,
        elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}

fn tag(index: usize) -> impl Fn(Error) -> Error {
    move |e| Error::Slice {
        index,
        source: Box::new(e),
    }
}

fn search(
    slices: &[SliceInput],
    cfg: &ExperimentConfig,
    exec: Execution,
) -> Result<Vec<SliceResult>> {
    let grid = cfg.effective_grid();
    cfg.validate_grid(&grid)?;
    for s in slices {
        check_shapes(&s.image, &s.gt, &s.roi).map_err(tag(s.index))?;
    }

    let denoise_jobs: Vec<(usize, usize)> = (0..slices.len())
        .flat_map(|i| (0..grid.denoise_sigma.len()).map(move |s| (i, s)))
        .collect();
    let smoothed: Vec<(GrayImage, f64)> = map_ordered(&denoise_jobs, exec, |&(i, s)| {
        let start = Instant::now();
        let img = denoise_with(&slices[i].image, grid.denoise_sigma[s], Execution::Serial);
        (img, start.elapsed().as_secs_f64() * 1e3)
    });
    let nsig = grid.denoise_sigma.len();

    let nk = grid.n_seeds.len();
    let groups: Vec<(usize, usize, usize)> = (0..slices.len())
        .flat_map(|i| (0..nsig).flat_map(move |s| (0..nk).map(move |k| (i, s, k))))
        .collect();
    let scored = map_ordered(&groups, exec, |&(i, s, k)| {
        score_group(i, &slices[i], &smoothed[i * nsig + s].0, &grid, (s, k), cfg)
            .map_err(tag(slices[i].index))
    });

    let mut best: Vec<Option<(usize, f64)>> = vec![None; slices.len()];
    let mut elapsed: Vec<f64> = (0..slices.len())
        .map(|i| (0..nsig).map(|s| smoothed[i * nsig + s].1).sum())
        .collect();
    let mut per_slice: Vec<Vec<f64>> = vec![vec![f64::NAN; grid.len()]; slices.len()];
    for g in scored {
        let g = g?;
        elapsed[g.slice] += g.elapsed_ms;
        for (idx, d) in g.scores {
            per_slice[g.slice][idx] = d;
        }
    }
    for (i, scores) in per_slice.iter().enumerate() {
        for (idx, &d) in scores.iter().enumerate() {
            debug_assert!(!d.is_nan());
            if best[i].is_none_or(|(_, b)| d > b) {
                best[i] = Some((idx, d));
            }
        }
    }

    Ok(slices
        .iter()
        .zip(best)
        .zip(elapsed)
        .map(|((s, b), ms)| {
            let (idx, d) = b.expect("non-empty grid");
            SliceResult {
                slice_index: s.index,
                best: grid.point(idx),
                dice: d,
                lesion_pct: lesion_percentage(&s.gt),
                elapsed_ms: ms,
            }
        })
        .collect())
}

/// Best grid point for one slice. Ties keep the earliest point in
/// lexicographic grid order.
pub fn tune_slice(input: &SliceInput, cfg: &ExperimentConfig) -> Result<SliceResult> {
    tune_slice_with(input, cfg, Execution::default())
}

pub fn tune_slice_with(
    input: &SliceInput,
    cfg: &ExperimentConfig,
    exec: Execution,
) -> Result<SliceResult> {
    let mut r = search(std::slice::from_ref(input), cfg, exec)?;
    Ok(r.remove(0))
}

pub fn run_experiment(slices: &[SliceInput], cfg: &ExperimentConfig) -> Result<ExperimentRun> {
    run_experiment_with(slices, cfg, Execution::default())
}

pub fn run_experiment_with(
    slices: &[SliceInput],
    cfg: &ExperimentConfig,
    exec: Execution,
) -> Result<ExperimentRun> {
    if slices.is_empty() {
        return Err(Error::InvalidParameter("no slices to tune".into()));
    }
    let start = Instant::now();
    let results = search(slices, cfg, exec)?;
    let minutes = start.elapsed().as_secs_f64() / 60.0;
    let summary =
        ExperimentSummary::from_results(cfg.experiment, &results, minutes).expect("non-empty");
    Ok(ExperimentRun { results, summary })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phantom::{generate_phantom, PhantomSpec};

    fn phantom_slice(seed: u64, noise: f64) -> SliceInput {
        let spec = PhantomSpec {
            width: 64,
            height: 64,
            center: (31.5, 31.5),
            radius: 14.0,
            noise_sigma: noise,
            rng_seed: seed,
            ..Default::default()
        };
        let (img, gt) = generate_phantom(&spec).unwrap();
        SliceInput::with_dilated_roi(seed as usize, img, gt)
    }

    fn small_cfg(e: Experiment) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::new(e, 7);
        cfg.grid = Grid {
            fuzzy_threshold: vec![0.1, 0.5, 1.0],
            n_seeds: vec![2, 3],
            denoise_sigma: vec![0.5, 1.0],
            dilate_size: vec![3, 5],
        };
        cfg
    }

    #[test]
    fn grid_order_is_lexicographic() {
        let g = Grid {
            fuzzy_threshold: vec![0.1, 0.2],
            n_seeds: vec![2, 3, 4],
            denoise_sigma: vec![1.0],
            dilate_size: vec![3, 5],
        };
        let pts: Vec<_> = g.points().collect();
        assert_eq!(pts.len(), 12);
        assert_eq!(pts[0].fuzzy_threshold, 0.1);
        assert_eq!((pts[1].n_seeds, pts[1].dilate_size), (2, 5));
        assert_eq!(pts[2].n_seeds, 3);
        assert_eq!(pts[6].fuzzy_threshold, 0.2);
        for t in 0..2 {
            for k in 0..3 {
                for d in 0..2 {
                    let p = g.point(g.index(t, k, 0, d));
                    assert_eq!(p.fuzzy_threshold, g.fuzzy_threshold[t]);
                    assert_eq!(p.n_seeds, g.n_seeds[k]);
                    assert_eq!(p.dilate_size, g.dilate_size[d]);
                }
            }
        }
    }

    #[test]
    fn effective_grids_nest() {
        let g1 = ExperimentConfig::new(Experiment::One, 0).effective_grid();
        let g2 = ExperimentConfig::new(Experiment::Two, 0).effective_grid();
        let g3 = ExperimentConfig::new(Experiment::Three, 0).effective_grid();
        assert_eq!(g1.denoise_sigma, vec![1.0]);
        assert_eq!(g1.dilate_size, vec![5]);
        assert_eq!(g2.dilate_size, vec![5]);
        let contains =
            |big: &Grid, small: &Grid| small.points().all(|p| big.points().any(|q| q == p));
        assert!(contains(&g2, &g1));
        assert!(contains(&g3, &g2));
        assert_eq!(g1.len(), 120);
        assert_eq!(g3.len(), 12 * 10 * 4 * 4);
    }

    #[test]
    fn empty_grid() {
        let mut cfg = ExperimentConfig::new(Experiment::One, 0);
        cfg.grid.n_seeds.clear();
        assert!(matches!(
            tune_slice(&phantom_slice(1, 0.0), &cfg),
            Err(Error::EmptyGrid)
        ));
    }

    #[test]
    fn bad_dilation_in_grid() {
        let mut cfg = small_cfg(Experiment::Three);
        cfg.grid.dilate_size = vec![1];
        assert!(matches!(
            tune_slice(&phantom_slice(1, 0.0), &cfg),
            Err(Error::KernelOrderViolation { .. })
        ));
    }

    #[test]
    fn singleton_grid() {
        let p = ParamPoint {
            fuzzy_threshold: 0.3,
            n_seeds: 3,
            denoise_sigma: 1.0,
            dilate_size: 5,
        };
        let mut cfg = ExperimentConfig::new(Experiment::Three, 3);
        cfg.grid = Grid::singleton(p);
        let r = tune_slice(&phantom_slice(2, 0.03), &cfg).unwrap();
        assert_eq!(r.best, p);
    }

    #[test]
    fn best_reproduces_under_evaluate() {
        let input = phantom_slice(4, 0.03);
        let cfg = small_cfg(Experiment::Three);
        let r = tune_slice(&input, &cfg).unwrap();
        let again = evaluate(
            &input.image,
            &input.gt,
            &input.roi,
            &r.best,
            &cfg.pipeline,
            slice_seed(cfg.rng_seed, input.index),
        )
        .unwrap();
        assert_eq!(again.dice, r.dice);
        assert!(r.dice > 0.9, "{r:?}");
    }

    #[test]
    fn every_grid_point_matches_evaluate() {
        let input = phantom_slice(5, 0.03);
        let cfg = small_cfg(Experiment::Three);
        let grid = cfg.effective_grid();
        let seed = slice_seed(cfg.rng_seed, input.index);
        let best = grid
            .points()
            .map(|p| {
                let d = evaluate(&input.image, &input.gt, &input.roi, &p, &cfg.pipeline, seed)
                    .unwrap()
                    .dice;
                (p, d)
            })
            .fold(None::<(ParamPoint, f64)>, |acc, (p, d)| match acc {
                Some((_, b)) if d <= b => acc,
                _ => Some((p, d)),
            })
            .unwrap();
        let r = tune_slice(&input, &cfg).unwrap();
        assert_eq!((r.best, r.dice), best);
    }

    #[test]
    fn empty_gt_and_roi_scores_one() {
        let img = GrayImage::filled(20, 20, 0.5).unwrap();
        let gt = BinaryMask::empty(20, 20);
        let roi = roi_from_ground_truth(&gt);
        let rec = evaluate(
            &img,
            &gt,
            &roi,
            &ParamPoint::default(),
            &PipelineSettings::default(),
            0,
        )
        .unwrap();
        assert_eq!(rec.dice, 1.0);
        assert_eq!(rec.lesion_pct, 0.0);
    }

    #[test]
    fn evaluate_shape_mismatch() {
        let img = GrayImage::filled(20, 20, 0.5).unwrap();
        let gt = BinaryMask::empty(20, 21);
        assert!(matches!(
            evaluate(
                &img,
                &gt,
                &gt,
                &ParamPoint::default(),
                &PipelineSettings::default(),
                0
            ),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn single_slice_summary() {
        let cfg = small_cfg(Experiment::One);
        let run = run_experiment(&[phantom_slice(3, 0.03)], &cfg).unwrap();
        let s = &run.summary;
        for st in [s.fuzzy_threshold, s.n_seeds, s.dice] {
            assert_eq!(st.std, 0.0);
            assert_eq!(st.min, st.max);
            assert_eq!(st.mean, st.min);
        }
    }

    #[test]
    fn stat_sample_std() {
        let s = Stat::of(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(s.mean, 2.5);
        assert!((s.std - (5.0f64 / 3.0).sqrt()).abs() < 1e-12);
        assert_eq!((s.min, s.max), (1.0, 4.0));
        let c = Stat::of(&[0.7; 5]).unwrap();
        assert_eq!(c.std, 0.0);
        assert!(Stat::of(&[]).is_none());
    }

    #[test]
    fn slice_errors_carry_index() {
        let mut bad = phantom_slice(1, 0.0);
        bad.index = 17;
        bad.gt = BinaryMask::empty(3, 3);
        let err =
            run_experiment(&[phantom_slice(2, 0.0), bad], &small_cfg(Experiment::One)).unwrap_err();
        assert!(matches!(err, Error::Slice { index: 17, .. }));
        assert!(matches!(err.root(), Error::DimensionMismatch { .. }));
    }

    #[test]
    fn serial_and_parallel_agree() {
        let slices: Vec<_> = (0..3).map(|i| phantom_slice(i, 0.03)).collect();
        let cfg = small_cfg(Experiment::Three);
        let a = run_experiment_with(&slices, &cfg, Execution::Serial).unwrap();
        let b = run_experiment_with(&slices, &cfg, Execution::Parallel).unwrap();
        for (x, y) in a.results.iter().zip(&b.results) {
            assert_eq!(
                (x.slice_index, x.best, x.dice),
                (y.slice_index, y.best, y.dice)
            );
        }
    }
}
