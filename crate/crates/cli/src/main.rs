//! `fisrg` command-line interface.
//!
//! Exit codes: 0 success, 2 usage error, 3 I/O error, 4 computation error.

mod commands;
mod config;
mod data;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fisrg::phantom::LesionShape;
use fisrg::tuner::Experiment;

use config::{CorpusKind, RoiPolicy, RunConfig, SliceRange};
use error::CliResult;

#[derive(Parser)]
#[command(
    name = "fisrg",
    version,
    about = "Fuzzy seeded region growing for lesion segmentation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Segment one 2D image and write the mask with a JSON sidecar.
    Segment {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        params: ParamArgs,
    },
    /// Grid-search the pipeline parameters over a set of slices.
    Tune {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        params: ParamArgs,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        corpus: CorpusArgs,
        /// Which parameters are searched: 1 threshold and seeds, 2 adds
        /// denoising sigma, 3 adds dilation size.
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
        experiment: Option<u8>,
    },
    /// Write a synthetic corpus as images/ and masks/ PGM files.
    Phantom {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long, value_enum)]
        shape: Option<ShapeArg>,
        #[arg(long)]
        radius: Option<f64>,
        /// Image width and height.
        #[arg(long)]
        size: Option<usize>,
        #[arg(long)]
        noise_sigma: Option<f64>,
        #[arg(long)]
        bridge_width: Option<usize>,
    },
    /// Print Dice and lesion percentage of a predicted mask.
    Evaluate {
        /// Predicted mask.
        #[arg(long)]
        input: PathBuf,
        /// Ground-truth mask.
        #[arg(long)]
        gt: PathBuf,
    },
}

#[derive(Args)]
struct CommonArgs {
    /// JSON run configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    rng_seed: Option<u64>,
    /// Worker threads; 1 runs serially.
    #[arg(long, env = "FISRG_THREADS")]
    threads: Option<usize>,
}

#[derive(Args)]
struct InputArgs {
    /// Image, slice directory (images/, masks/) or NIfTI volume.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    gt: Option<PathBuf>,
    /// ROI mask; implies --roi-policy provided-mask.
    #[arg(long)]
    roi: Option<PathBuf>,
    #[arg(long, value_enum)]
    roi_policy: Option<RoiPolicy>,
    #[arg(long)]
    axis: Option<usize>,
    /// Half-open slice range A..B.
    #[arg(long)]
    slices: Option<SliceRange>,
}

#[derive(Args)]
struct ParamArgs {
    #[arg(long)]
    fuzzy_threshold: Option<f64>,
    #[arg(long)]
    n_seeds: Option<usize>,
    #[arg(long)]
    denoise_sigma: Option<f64>,
    #[arg(long)]
    dilate_size: Option<usize>,
}

#[derive(Args)]
struct GridArgs {
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    grid_fuzzy_threshold: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    grid_n_seeds: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    grid_denoise_sigma: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    grid_dilate_size: Option<Vec<usize>>,
}

#[derive(Args)]
struct CorpusArgs {
    /// Synthetic corpus used when no --input is given.
    #[arg(long, value_enum)]
    corpus: Option<CorpusKind>,
    #[arg(long)]
    count: Option<usize>,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum ShapeArg {
    Disk,
    TwoLobes,
    Distractor,
}

impl CommonArgs {
    fn load(&self) -> CliResult<RunConfig> {
        let mut cfg = RunConfig::load_or_default(self.config.as_deref())?;
        if let Some(o) = &self.out {
            cfg.out = o.clone();
        }
        if let Some(s) = self.rng_seed {
            cfg.rng_seed = s;
            cfg.corpus.rng_seed = s;
        }
        if self.threads.is_some() {
            cfg.threads = self.threads;
        }
        Ok(cfg)
    }
}

impl InputArgs {
    fn apply(self, cfg: &mut RunConfig) {
        if self.input.is_some() {
            cfg.input = self.input;
        }
        if self.gt.is_some() {
            cfg.gt = self.gt;
        }
        if self.roi.is_some() {
            cfg.roi = self.roi;
            cfg.roi_policy = RoiPolicy::ProvidedMask;
        }
        if let Some(p) = self.roi_policy {
            cfg.roi_policy = p;
        }
        if let Some(a) = self.axis {
            cfg.axis = a;
        }
        if self.slices.is_some() {
            cfg.slices = self.slices;
        }
    }
}

impl ParamArgs {
    fn apply(self, cfg: &mut RunConfig) {
        let p = &mut cfg.params;
        p.fuzzy_threshold = self.fuzzy_threshold.unwrap_or(p.fuzzy_threshold);
        p.n_seeds = self.n_seeds.unwrap_or(p.n_seeds);
        p.denoise_sigma = self.denoise_sigma.unwrap_or(p.denoise_sigma);
        p.dilate_size = self.dilate_size.unwrap_or(p.dilate_size);
    }
}

impl GridArgs {
    fn apply(self, cfg: &mut RunConfig) {
        let g = &mut cfg.grid;
        g.fuzzy_threshold = self
            .grid_fuzzy_threshold
            .unwrap_or(std::mem::take(&mut g.fuzzy_threshold));
        g.n_seeds = self.grid_n_seeds.unwrap_or(std::mem::take(&mut g.n_seeds));
        g.denoise_sigma = self
            .grid_denoise_sigma
            .unwrap_or(std::mem::take(&mut g.denoise_sigma));
        g.dilate_size = self
            .grid_dilate_size
            .unwrap_or(std::mem::take(&mut g.dilate_size));
    }
}

impl CorpusArgs {
    fn apply(self, cfg: &mut RunConfig) {
        if let Some(k) = self.corpus {
            cfg.corpus.kind = k;
        }
        if let Some(n) = self.count {
            cfg.corpus.count = n;
        }
    }
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Segment {
            common,
            input,
            params,
        } => {
            let mut cfg = common.load()?;
            input.apply(&mut cfg);
            params.apply(&mut cfg);
            commands::segment_cmd(&cfg)
        }
        Command::Tune {
            common,
            input,
            params,
            grid,
            corpus,
            experiment,
        } => {
            let mut cfg = common.load()?;
            input.apply(&mut cfg);
            params.apply(&mut cfg);
            grid.apply(&mut cfg);
            corpus.apply(&mut cfg);
            if let Some(e) = experiment {
                cfg.experiment = Experiment::try_from(e).map_err(error::CliError::Usage)?;
            }
            commands::tune(&cfg)
        }
        Command::Phantom {
            common,
            corpus,
            shape,
            radius,
            size,
            noise_sigma,
            bridge_width,
        } => {
            let mut cfg = common.load()?;
            corpus.apply(&mut cfg);
            let custom = shape.is_some()
                || radius.is_some()
                || size.is_some()
                || noise_sigma.is_some()
                || bridge_width.is_some();
            if custom {
                cfg.corpus.kind = CorpusKind::Custom;
                let spec = &mut cfg.corpus.spec;
                if let Some(s) = shape {
                    spec.lesion_shape = match s {
                        ShapeArg::Disk => LesionShape::Disk,
                        ShapeArg::TwoLobes => LesionShape::TwoLobesWithBridge,
                        ShapeArg::Distractor => LesionShape::AnnulusAdjacentDistractor,
                    };
                }
                if let Some(n) = size {
                    spec.width = n;
                    spec.height = n;
                    let c = (n as f64 - 1.0) / 2.0;
                    spec.center = (c, c);
                }
                spec.radius = radius.unwrap_or(spec.radius);
                spec.noise_sigma = noise_sigma.unwrap_or(spec.noise_sigma);
                spec.bridge_width = bridge_width.unwrap_or(spec.bridge_width);
            }
            commands::phantom_cmd(&cfg)
        }
        Command::Evaluate { input, gt } => commands::evaluate_cmd(&input, &gt),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("fisrg: {e}");
            e.exit_code()
        }
    }
}
