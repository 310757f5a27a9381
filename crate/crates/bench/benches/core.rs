use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use gol_bench::{random_dataset, random_features, random_image, random_points};
use gol_core::classifier::{train, Architecture, TrainConfig};
use gol_core::energy::{bhattacharyya_energy, Aggregation};
use gol_core::pareto::{hypervolume, pareto_front_indices};
use gol_core::rng::stream_rng;
use gol_core::{apply_pipeline, sample_params, GeneratorParams, Orientation, VarianceSchedule};

fn pareto(c: &mut Criterion) {
    let points = random_points(1000, 6, 1);
    c.bench_function("pareto_front_1000x6", |b| {
        b.iter(|| pareto_front_indices(black_box(&points), Orientation::Maximize).unwrap())
    });
    let front_points = random_points(200, 3, 2);
    let front: Vec<Vec<f64>> = pareto_front_indices(&front_points, Orientation::Maximize)
        .unwrap()
        .into_iter()
        .map(|i| front_points[i].clone())
        .collect();
    c.bench_function("hypervolume_3d", |b| {
        b.iter(|| hypervolume(black_box(&front), &[0.0, 0.0, 0.0], Orientation::Maximize).unwrap())
    });
}

fn energy(c: &mut Criterion) {
    let synthetic = random_features(100, 32, 3);
    let regularization = random_features(5, 32, 4);
    c.bench_function("bhattacharyya_100x5", |b| {
        b.iter(|| bhattacharyya_energy(black_box(&synthetic), &regularization, Aggregation::Mean).unwrap())
    });
}

fn generator(c: &mut Criterion) {
    let image = random_image(32, 32, 3, 5);
    let schedule = VarianceSchedule::proportional(&GeneratorParams::identity().bounds, 0.05, 0.02).unwrap();
    let mut rng = stream_rng(6, 0);
    let params = sample_params(&GeneratorParams::identity(), &schedule, 1, &mut rng).unwrap();
    c.bench_function("apply_pipeline_32x32x3", |b| {
        b.iter(|| apply_pipeline(black_box(&image), &params, &mut rng).unwrap())
    });
}

fn classifier(c: &mut Criterion) {
    let data = random_dataset(64, 4, 32, 7);
    let arch = Architecture::default_for(4);
    let cfg = TrainConfig {
        epochs: 1,
        ..TrainConfig::default()
    };
    let mut group = c.benchmark_group("classifier");
    group.sample_size(10);
    group.bench_function("train_epoch_64_default_arch", |b| b.iter(|| train(&arch, black_box(&data), &cfg).unwrap()));
    group.finish();
}

criterion_group!(benches, pareto, energy, generator, classifier);
criterion_main!(benches);
