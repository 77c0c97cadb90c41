use std::path::{Path, PathBuf};
use std::time::Instant;

use fisrg::io::{load_gray, load_mask, save_gray, save_mask};
use fisrg::metrics::{dice, lesion_percentage};
use fisrg::phantom::generate_phantom;
use fisrg::report::{results_csv, summary_table, Chart};
use fisrg::tuner::{
    roi_from_ground_truth, run_experiment_with, segment, ParamPoint, PipelineSettings,
};
use fisrg::Execution;
use serde::Serialize;

use crate::config::RunConfig;
use crate::data::{load_slices, prepare_out_dir, require_exists, resolve_source, write_file};
use crate::error::{usage, CliError, CliResult};

pub const CONFIG_ECHO: &str = "config-echo.json";
pub const RESULTS_CSV: &str = "results.csv";
pub const SUMMARY_TXT: &str = "summary.txt";
pub const CHART_SVG: &str = "dice_lesion.svg";
pub const MASK_PGM: &str = "mask.pgm";
pub const SEGMENT_JSON: &str = "segment.json";

fn echo_config(cfg: &RunConfig) -> CliResult<()> {
    write_file(&cfg.out.join(CONFIG_ECHO), cfg.to_json())
}

/// Runs `f` with the requested parallelism. One thread means serial
/// execution; otherwise a dedicated pool of that size is used.
fn with_threads<T: Send>(
    threads: Option<usize>,
    f: impl FnOnce(Execution) -> T + Send,
) -> CliResult<T> {
    match threads {
        Some(1) => Ok(f(Execution::Serial)),
        #[cfg(feature = "parallel")]
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Compute(format!("cannot start {n} worker threads: {e}")))?;
            Ok(pool.install(|| f(Execution::Parallel)))
        }
        _ => Ok(f(Execution::Parallel)),
    }
}

pub fn tune(cfg: &RunConfig) -> CliResult<()> {
    cfg.validate()?;
    let source = resolve_source(cfg)?;
    prepare_out_dir(&cfg.out)?;
    echo_config(cfg)?;

    let slices = load_slices(cfg, &source)?;
    let exp = cfg.experiment_config();
    let run = with_threads(cfg.threads, |exec| run_experiment_with(&slices, &exp, exec))??;

    write_file(&cfg.out.join(RESULTS_CSV), results_csv(&run.results))?;
    let table = summary_table(&run.summary);
    write_file(&cfg.out.join(SUMMARY_TXT), &table)?;
    let chart = Chart::dice_and_lesion(
        format!(
            "Dice score and lesion percentage per slice, experiment {}",
            cfg.experiment.id()
        ),
        &run.results,
    );
    write_file(&cfg.out.join(CHART_SVG), chart.to_svg())?;
    print!("{table}");
    Ok(())
}

#[derive(Serialize)]
struct SegmentSidecar<'a> {
    input: &'a Path,
    roi: &'a Path,
    roi_from_gt: bool,
    params: ParamPoint,
    pipeline: &'a PipelineSettings,
    rng_seed: u64,
    seeds: Vec<[usize; 2]>,
    mask_pixels: usize,
    elapsed_ms: f64,
    dice: Option<f64>,
    lesion_pct: Option<f64>,
}

pub fn segment_cmd(cfg: &RunConfig) -> CliResult<()> {
    cfg.validate()?;
    let Some(input) = &cfg.input else {
        return usage("segment needs --input");
    };
    require_exists("input", input)?;
    let (roi_path, roi_from_gt): (&PathBuf, bool) = match (&cfg.roi, &cfg.gt) {
        (Some(r), _) => (r, false),
        (None, Some(g)) => (g, true),
        (None, None) => return usage("segment needs --roi or --gt"),
    };
    require_exists(if roi_from_gt { "ground truth" } else { "ROI" }, roi_path)?;
    if let Some(g) = &cfg.gt {
        require_exists("ground truth", g)?;
    }
    prepare_out_dir(&cfg.out)?;
    echo_config(cfg)?;

    let img = load_gray(input)?;
    let gt = cfg.gt.as_ref().map(load_mask).transpose()?;
    let roi = match (roi_from_gt, &gt) {
        (true, Some(g)) => roi_from_ground_truth(g),
        _ => load_mask(roi_path)?,
    };
    let start = Instant::now();
    let seg = segment(&img, &roi, &cfg.params, &cfg.pipeline, cfg.rng_seed)?;
    let elapsed_ms = start.elapsed().as_secs_f64() * 1e3;
    let score = gt.as_ref().map(|g| dice(&seg.mask, g)).transpose()?;

    save_mask(&seg.mask, cfg.out.join(MASK_PGM))?;
    let sidecar = SegmentSidecar {
        input,
        roi: roi_path,
        roi_from_gt,
        params: cfg.params,
        pipeline: &cfg.pipeline,
        rng_seed: cfg.rng_seed,
        seeds: seg
            .seeds
            .as_ref()
            .map(|s| s.points().iter().map(|p| [p.x, p.y]).collect())
            .unwrap_or_default(),
        mask_pixels: seg.mask.count(),
        elapsed_ms,
        dice: score,
        lesion_pct: gt.as_ref().map(lesion_percentage),
    };
    let json = serde_json::to_string_pretty(&sidecar).expect("sidecar serializes") + "\n";
    write_file(&cfg.out.join(SEGMENT_JSON), json)?;
    match score {
        Some(d) => println!("mask_pixels={} dice={d:.6}", seg.mask.count()),
        None => println!("mask_pixels={}", seg.mask.count()),
    }
    Ok(())
}

pub fn phantom_cmd(cfg: &RunConfig) -> CliResult<()> {
    if cfg.corpus.count == 0 {
        return usage("--count must be at least 1");
    }
    let specs = cfg.corpus.specs();
    prepare_out_dir(&cfg.out)?;
    let images = cfg.out.join("images");
    let masks = cfg.out.join("masks");
    for dir in [&images, &masks] {
        prepare_out_dir(dir)?;
    }
    echo_config(cfg)?;
    for (i, spec) in specs.iter().enumerate() {
        let (img, gt) =
            generate_phantom(spec).map_err(|e| CliError::Usage(format!("phantom {i}: {e}")))?;
        let name = format!("slice_{i:03}.pgm");
        save_gray(&img, images.join(&name))?;
        save_mask(&gt, masks.join(&name))?;
    }
    println!(
        "wrote {} phantom slices to {}",
        specs.len(),
        cfg.out.display()
    );
    Ok(())
}

pub fn evaluate_cmd(pred: &Path, gt: &Path) -> CliResult<()> {
    require_exists("prediction", pred)?;
    require_exists("ground truth", gt)?;
    let p = load_mask(pred)?;
    let g = load_mask(gt)?;
    let d = dice(&p, &g)
        .map_err(|e| CliError::Io(format!("{} vs {}: {e}", pred.display(), gt.display())))?;
    println!("dice={d:.6} lesion_pct={:.4}", lesion_percentage(&g));
    Ok(())
}
