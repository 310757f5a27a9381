//! Deterministic inputs shared by the benchmarks.

use gol_core::rng::stream_rng;
use gol_core::{FeatureVector, Image, LabeledSample, SyntheticDataset};
use rand::Rng;

/// `n` uniform points in `[0, 1)^dim`.
pub fn random_points(n: usize, dim: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = stream_rng(seed, 0);
    (0..n).map(|_| (0..dim).map(|_| rng.random()).collect()).collect()
}

pub fn random_image(width: usize, height: usize, channels: usize, seed: u64) -> Image {
    let mut rng = stream_rng(seed, 1);
    Image::from_fn(width, height, channels, |_, _, _| rng.random()).expect("valid image")
}

/// Histograms with strictly positive mass.
pub fn random_features(n: usize, bins: usize, seed: u64) -> Vec<FeatureVector> {
    let mut rng = stream_rng(seed, 2);
    (0..n)
        .map(|_| FeatureVector::new((0..bins).map(|_| rng.random_range(0.01..1.0)).collect()).expect("non-negative"))
        .collect()
}

/// Random grayscale images with labels cycling through `classes`.
pub fn random_dataset(n: usize, classes: usize, size: usize, seed: u64) -> SyntheticDataset {
    let samples = (0..n)
        .map(|i| LabeledSample::new(random_image(size, size, 1, seed + i as u64), i % classes))
        .collect();
    SyntheticDataset::new(samples, classes, None).expect("labels in range")
}
