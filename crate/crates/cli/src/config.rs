//! Run configuration: a JSON document whose every field has a default,
//! overridden by command-line flags.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use fisrg::phantom::{distractor_corpus, reference_corpus, PhantomSpec};
use fisrg::tuner::{Experiment, ExperimentConfig, Grid, ParamPoint, PipelineSettings};
use serde::{Deserialize, Serialize};

use crate::error::{usage, CliError, CliResult};

pub const DEFAULT_RNG_SEED: u64 = 2024;

/// Half-open slice index range written `A..B`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct SliceRange {
    pub start: usize,
    pub end: usize,
}

impl FromStr for SliceRange {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (a, b) = s
            .split_once("..")
            .ok_or_else(|| format!("slice range `{s}` must look like A..B"))?;
        let parse = |v: &str| {
            v.trim()
                .parse::<usize>()
                .map_err(|_| format!("slice range `{s}`: `{v}` is not a non-negative integer"))
        };
        let r = SliceRange {
            start: parse(a)?,
            end: parse(b)?,
        };
        if r.end <= r.start {
            return Err(format!("slice range `{s}` is empty"));
        }
        Ok(r)
    }
}

impl TryFrom<String> for SliceRange {
    type Error = String;

    fn try_from(s: String) -> Result<Self, String> {
        s.parse()
    }
}

impl From<SliceRange> for String {
    fn from(r: SliceRange) -> String {
        r.to_string()
    }
}

impl fmt::Display for SliceRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..{}", self.start, self.end)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum RoiPolicy {
    /// Ground truth dilated by a radius-15 disk.
    #[default]
    DilatedGt,
    /// An explicit ROI mask per slice.
    ProvidedMask,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum CorpusKind {
    /// Alternating large disks and two-lobe lesions.
    #[default]
    Reference,
    /// Two-lobe lesions ringed by a dark distractor.
    Distractor,
    /// Jittered copies of `spec`.
    Custom,
}

/// Synthetic corpus used when no input is given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusConfig {
    pub kind: CorpusKind,
    pub count: usize,
    pub rng_seed: u64,
    pub spec: PhantomSpec,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        CorpusConfig {
            kind: CorpusKind::Reference,
            count: 20,
            rng_seed: DEFAULT_RNG_SEED,
            spec: PhantomSpec::default(),
        }
    }
}

impl CorpusConfig {
    pub fn specs(&self) -> Vec<PhantomSpec> {
        match self.kind {
            CorpusKind::Reference => reference_corpus(self.count, self.rng_seed),
            CorpusKind::Distractor => distractor_corpus(self.count, self.rng_seed),
            CorpusKind::Custom => PhantomSpec {
                rng_seed: self.rng_seed,
                ..self.spec.clone()
            }
            .corpus(self.count),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Image file, slice directory, or NIfTI volume. `None` selects the
    /// synthetic corpus.
    pub input: Option<PathBuf>,
    /// Ground-truth mask: file, directory or volume matching `input`.
    pub gt: Option<PathBuf>,
    /// ROI mask: file, directory or volume matching `input`.
    pub roi: Option<PathBuf>,
    pub roi_policy: RoiPolicy,
    /// Volume axis slices are taken across.
    pub axis: usize,
    pub slices: Option<SliceRange>,
    pub corpus: CorpusConfig,
    pub experiment: Experiment,
    /// Parameters used by `segment` and for non-free tuning parameters.
    pub params: ParamPoint,
    pub grid: Grid,
    pub pipeline: PipelineSettings,
    pub rng_seed: u64,
    pub out: PathBuf,
    pub threads: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            input: None,
            gt: None,
            roi: None,
            roi_policy: RoiPolicy::DilatedGt,
            axis: 2,
            slices: None,
            corpus: CorpusConfig::default(),
            experiment: Experiment::One,
            params: ParamPoint::default(),
            grid: Grid::default(),
            pipeline: PipelineSettings::default(),
            rng_seed: DEFAULT_RNG_SEED,
            out: PathBuf::from("fisrg-out"),
            threads: None,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))
    }

    pub fn load_or_default(path: Option<&Path>) -> CliResult<Self> {
        path.map_or_else(|| Ok(RunConfig::default()), RunConfig::load)
    }

    pub fn experiment_config(&self) -> ExperimentConfig {
        ExperimentConfig {
            experiment: self.experiment,
            fixed_defaults: self.params,
            grid: self.grid.clone(),
            rng_seed: self.rng_seed,
            pipeline: self.pipeline.clone(),
        }
    }

    /// Static checks that need no file access.
    pub fn validate(&self) -> CliResult<()> {
        if self.axis > 2 {
            return usage(format!("axis must be 0, 1 or 2, got {}", self.axis));
        }
        if self.threads == Some(0) {
            return usage("thread count must be at least 1");
        }
        if self.roi_policy == RoiPolicy::ProvidedMask && self.roi.is_none() {
            return usage("ROI policy provided-mask needs --roi");
        }
        if self.input.is_none() && self.corpus.count == 0 {
            return usage("corpus count must be at least 1");
        }
        let cfg = self.experiment_config();
        cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        let single = ExperimentConfig {
            experiment: Experiment::One,
            grid: Grid::singleton(self.params),
            ..cfg
        };
        single
            .validate()
            .map_err(|e| CliError::Usage(format!("params: {e}")))
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serializes");
        s.push('\n');
        s
    }
}
