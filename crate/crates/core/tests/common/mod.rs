#![allow(dead_code)]

use gol_core::classifier::TrainConfig;
use gol_core::rng::stream_rng;
use gol_core::{GolConfig, Image, LabeledSample, OneShotSet, RegularizationSet};
use rand::Rng;

/// Three 8x8 glyphs: a vertical bar, a horizontal bar and a centred dot.
pub fn glyph(class: usize, x: usize, y: usize) -> f64 {
    let on = match class {
        0 => (3..5).contains(&x),
        1 => (3..5).contains(&y),
        _ => (2..6).contains(&x) && (2..6).contains(&y),
    };
    if on { 0.9 } else { 0.1 }
}

pub fn templates(classes: usize) -> OneShotSet {
    let entries = (0..classes)
        .map(|k| (Image::from_fn(8, 8, 1, |x, y, _| glyph(k, x, y)).unwrap(), k))
        .collect();
    OneShotSet::new(entries).unwrap()
}

/// Noisy copies of the glyphs, `per_class` per class.
pub fn regularization(classes: usize, per_class: usize) -> RegularizationSet {
    let mut rng = stream_rng(99, 0);
    let mut samples = Vec::new();
    for k in 0..classes {
        for _ in 0..per_class {
            let img = Image::from_fn(8, 8, 1, |x, y, _| glyph(k, x, y) + rng.random_range(-0.08..0.08)).unwrap();
            samples.push(LabeledSample::new(img, k));
        }
    }
    RegularizationSet::new(samples, classes).unwrap()
}

/// A short run on the 8x8 glyphs with a tiny network.
pub fn small_config(episodes: usize, candidates: usize, seed: u64) -> GolConfig {
    let train = TrainConfig {
        epochs: 2,
        ..TrainConfig::default()
    };
    GolConfig {
        episodes,
        candidates,
        samples: 30,
        train: train.clone(),
        final_train: train,
        arch: "8x8x1:fc8".into(),
        seed,
        threads: 1,
        ..GolConfig::default()
    }
}
