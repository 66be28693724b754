//! Parallel-vs-sequential throughput for the three heavy loops: the
//! per-source connectivity sweep, cohort simulation, and one full-batch
//! training epoch. The sequential numbers come from running the identical
//! code inside a single-thread rayon pool, so the comparison isolates the
//! scheduling overhead and the speedup without touching feature flags.

use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use lsagc_core::gat::{GatArchitecture, GatModel};
use lsagc_core::granger::{lsagc_connectivity, ArPredictorConfig};
use lsagc_core::par::run_sequential;
use lsagc_core::pipeline::{build_dataset, make_folds, FeatureMethod, PipelineConfig};
use lsagc_core::synth::{generate_var, Topology, VarNetworkSpec};
use lsagc_core::train::{train, TrainConfig};
use lsagc_core::TimeSeriesEnsemble;

fn bench_ensemble(n: usize, t: usize, seed: u64) -> TimeSeriesEnsemble {
    let spec = VarNetworkSpec {
        n_nodes: n,
        topology: Topology::RandomDag,
        edge_density: 0.2,
        coupling: 0.5,
        lag_order: 2,
        noise_sd: 1.0,
        t_samples: t,
        seed,
    };
    generate_var(&spec).unwrap().0.standardize()
}

fn connectivity_sweep(c: &mut Criterion) {
    let ensemble = bench_ensemble(20, 400, 41);
    let config = ArPredictorConfig::new(5, 2);
    let mut group = c.benchmark_group("connectivity_20x400");
    group.sample_size(10);
    group.bench_function("parallel", |b| {
        b.iter(|| lsagc_connectivity(black_box(&ensemble), black_box(&config)).unwrap())
    });
    group.bench_function("sequential", |b| {
        b.iter(|| {
            run_sequential(|| lsagc_connectivity(black_box(&ensemble), black_box(&config)).unwrap())
        })
    });
    group.finish();
}

fn dataset_build(c: &mut Criterion) {
    let subjects: Vec<_> = (0..8)
        .map(|i| (bench_ensemble(10, 200, 100 + i), u8::from(i % 2 == 0)))
        .collect();
    let labels: Vec<u8> = subjects.iter().map(|(_, l)| *l).collect();
    let folds = make_folds(&labels, 2, 0).unwrap();
    let config = PipelineConfig::default();
    let mut group = c.benchmark_group("dataset_8x10x200");
    group.sample_size(10);
    group.bench_function("parallel", |b| {
        b.iter(|| {
            build_dataset(
                black_box(&subjects),
                FeatureMethod::Lsagc,
                black_box(&config),
                &folds,
            )
            .unwrap()
        })
    });
    group.bench_function("sequential", |b| {
        b.iter(|| {
            run_sequential(|| {
                build_dataset(
                    black_box(&subjects),
                    FeatureMethod::Lsagc,
                    black_box(&config),
                    &folds,
                )
                .unwrap()
            })
        })
    });
    group.finish();
}

fn training_epochs(c: &mut Criterion) {
    let subjects: Vec<_> = (0..8)
        .map(|i| (bench_ensemble(10, 200, 200 + i), u8::from(i % 2 == 0)))
        .collect();
    let labels: Vec<u8> = subjects.iter().map(|(_, l)| *l).collect();
    let folds = make_folds(&labels, 2, 0).unwrap();
    let config = PipelineConfig::default();
    let data = build_dataset(&subjects, FeatureMethod::Lsagc, &config, &folds).unwrap();
    let arch = GatArchitecture::new(10);
    let train_cfg = TrainConfig {
        epochs: 5,
        ..TrainConfig::default()
    };
    let mut group = c.benchmark_group("train_5_epochs_216_samples");
    group.sample_size(10);
    group.bench_function("parallel", |b| {
        b.iter(|| {
            let model = GatModel::init(&arch, 7).unwrap();
            train(model, black_box(&data.samples), None, &train_cfg).unwrap()
        })
    });
    group.bench_function("sequential", |b| {
        b.iter(|| {
            run_sequential(|| {
                let model = GatModel::init(&arch, 7).unwrap();
                train(model, black_box(&data.samples), None, &train_cfg).unwrap()
            })
        })
    });
    group.finish();
}

criterion_group!(benches, connectivity_sweep, dataset_build, training_epochs);
criterion_main!(benches);
