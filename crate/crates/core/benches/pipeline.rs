use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use fisrg::phantom::{generate_phantom, reference_corpus, tuning_slices, PhantomSpec};
use fisrg::preprocess::denoise_with;
use fisrg::tuner::{run_experiment_with, Experiment, ExperimentConfig, Grid};
use fisrg::Execution;

const MODES: [(&str, Execution); 2] = [
    ("serial", Execution::Serial),
    ("parallel", Execution::Parallel),
];

fn bench_denoise(c: &mut Criterion) {
    let spec = PhantomSpec {
        width: 256,
        height: 256,
        center: (127.5, 127.5),
        radius: 40.0,
        ..Default::default()
    };
    let (img, _) = generate_phantom(&spec).unwrap();
    let mut group = c.benchmark_group("denoise_256");
    for (name, exec) in MODES {
        for sigma in [1.0, 2.0] {
            group.bench_with_input(BenchmarkId::new(name, sigma), &sigma, |b, &s| {
                b.iter(|| denoise_with(black_box(&img), s, exec))
            });
        }
    }
    group.finish();
}

fn bench_tuner(c: &mut Criterion) {
    let slices = tuning_slices(&reference_corpus(4, 7)).unwrap();
    let mut cfg = ExperimentConfig::new(Experiment::Two, 1);
    cfg.grid = Grid {
        fuzzy_threshold: vec![0.1, 0.3, 0.5],
        n_seeds: vec![2, 4],
        denoise_sigma: vec![0.5, 1.0],
        ..Grid::default()
    };
    let mut group = c.benchmark_group("tune_exp2_4_slices");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(name, |b| {
            b.iter(|| run_experiment_with(black_box(&slices), &cfg, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, bench_denoise, bench_tuner);
criterion_main!(benches);
