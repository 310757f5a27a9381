//! The generalization generator: a fixed, ordered pipeline of parameterized
//! transforms that turns one-shot templates into synthetic datasets.

mod transforms;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

pub use transforms::{TransformKind, TRANSFORM_COUNT};

use crate::dataset::{LabeledSample, OneShotSet, Provenance, SyntheticDataset};
use crate::error::{GolError, Result};
use crate::image::Image;
use crate::rng::stream_rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub lower: f64,
    pub upper: f64,
}

impl Bounds {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if !(lower.is_finite() && upper.is_finite() && lower <= upper) {
            return Err(GolError::config(format!("invalid bounds [{lower}, {upper}]")));
        }
        Ok(Self { lower, upper })
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.lower && v <= self.upper
    }

    pub fn clamp(&self, v: f64) -> f64 {
        v.clamp(self.lower, self.upper)
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

pub fn default_bounds() -> Vec<Bounds> {
    TransformKind::ALL
        .iter()
        .map(|k| {
            let (lower, upper) = k.default_bounds();
            Bounds { lower, upper }
        })
        .collect()
}

/// The decision vector: one magnitude per registered transform, plus bounds.
///
/// Fields are public so callers can assemble arbitrary vectors; every consumer
/// calls [`GeneratorParams::validate`] before use.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorParams {
    pub theta: Vec<f64>,
    pub bounds: Vec<Bounds>,
}

impl GeneratorParams {
    pub fn new(theta: Vec<f64>, bounds: Vec<Bounds>) -> Result<Self> {
        let p = Self { theta, bounds };
        p.validate()?;
        Ok(p)
    }

    /// All magnitudes at their identity value (0) with default bounds.
    pub fn identity() -> Self {
        Self {
            theta: vec![0.0; TRANSFORM_COUNT],
            bounds: default_bounds(),
        }
    }

    pub fn with_theta(&self, theta: Vec<f64>) -> Result<Self> {
        Self::new(theta, self.bounds.clone())
    }

    pub fn validate(&self) -> Result<()> {
        for (context, len) in [("generator theta", self.theta.len()), ("generator bounds", self.bounds.len())] {
            if len != TRANSFORM_COUNT {
                return Err(GolError::DimensionMismatch {
                    context,
                    expected: TRANSFORM_COUNT,
                    found: len,
                });
            }
        }
        for (index, ((&value, b), kind)) in self
            .theta
            .iter()
            .zip(&self.bounds)
            .zip(TransformKind::ALL)
            .enumerate()
        {
            if !b.contains(value) {
                return Err(GolError::ParameterOutOfBounds {
                    index,
                    name: kind.name(),
                    value,
                    lower: b.lower,
                    upper: b.upper,
                });
            }
        }
        Ok(())
    }
}

/// Per-parameter standard deviation growing linearly with the episode:
/// `sigma_i(t) = sigma0_i + t * delta_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct VarianceSchedule {
    sigma0: Vec<f64>,
    delta: Vec<f64>,
}

impl VarianceSchedule {
    pub fn new(sigma0: Vec<f64>, delta: Vec<f64>) -> Result<Self> {
        for (context, v) in [("schedule sigma0", &sigma0), ("schedule delta", &delta)] {
            if v.len() != TRANSFORM_COUNT {
                return Err(GolError::DimensionMismatch {
                    context,
                    expected: TRANSFORM_COUNT,
                    found: v.len(),
                });
            }
            if let Some(bad) = v.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
                return Err(GolError::config(format!("{context} entry {bad} must be >= 0")));
            }
        }
        Ok(Self { sigma0, delta })
    }

    /// No variance at all: sampling returns the mean every episode.
    pub fn zero() -> Self {
        Self {
            sigma0: vec![0.0; TRANSFORM_COUNT],
            delta: vec![0.0; TRANSFORM_COUNT],
        }
    }

    /// `sigma0` and `delta` as fixed fractions of each bound's width.
    pub fn proportional(bounds: &[Bounds], sigma0_fraction: f64, delta_fraction: f64) -> Result<Self> {
        Self::new(
            bounds.iter().map(|b| b.width() * sigma0_fraction).collect(),
            bounds.iter().map(|b| b.width() * delta_fraction).collect(),
        )
    }

    pub fn sigma0(&self) -> &[f64] {
        &self.sigma0
    }

    pub fn delta(&self) -> &[f64] {
        &self.delta
    }

    pub fn sigma_at(&self, episode: usize) -> Vec<f64> {
        self.sigma0
            .iter()
            .zip(&self.delta)
            .map(|(s, d)| s + episode as f64 * d)
            .collect()
    }
}

/// Draws `theta_i ~ N(mean_i, sigma_i(t))`, clamped into the mean's bounds.
pub fn sample_params<R: Rng + ?Sized>(
    mean: &GeneratorParams,
    schedule: &VarianceSchedule,
    episode: usize,
    rng: &mut R,
) -> Result<GeneratorParams> {
    if episode == 0 {
        return Err(GolError::config("episodes are numbered from 1"));
    }
    mean.validate()?;
    let sigma = schedule.sigma_at(episode);
    let theta = mean
        .theta
        .iter()
        .zip(&sigma)
        .zip(&mean.bounds)
        .map(|((&mu, &s), b)| {
            let z: f64 = StandardNormal.sample(rng);
            b.clamp(mu + s * z)
        })
        .collect();
    Ok(GeneratorParams {
        theta,
        bounds: mean.bounds.clone(),
    })
}

/// Runs `image` through all transforms in registered order.
///
/// Each transform draws its per-sample intensity uniformly within the
/// envelope given by its magnitude; exactly one uniform is consumed per
/// transform before any transform-specific randomness.
pub fn apply_pipeline<R: Rng + ?Sized>(
    image: &Image,
    params: &GeneratorParams,
    rng: &mut R,
) -> Result<Image> {
    params.validate()?;
    let mut out = image.clone();
    for (kind, &theta) in TransformKind::ALL.iter().zip(&params.theta) {
        let u: f64 = rng.random();
        let intensity = kind.intensity(theta, u);
        if intensity != 0.0 {
            out = kind.apply(&out, intensity, rng);
        }
    }
    Ok(out)
}

/// Generates `m` labeled samples spread evenly over the template classes.
///
/// Classes are laid out contiguously (class 0 first); class `k` receives
/// `floor(m / K)` samples plus one if `k < m mod K`. Global sample `j` is
/// produced with its own random stream `(seed, j)`.
pub fn generate(
    templates: &OneShotSet,
    params: &GeneratorParams,
    m: usize,
    seed: u64,
) -> Result<SyntheticDataset> {
    params.validate()?;
    let k = templates.class_count();
    if m < k {
        return Err(GolError::config(format!(
            "cannot generate {m} samples for {k} classes (need m >= K)"
        )));
    }
    if m < 10 * k {
        log::warn!("generating only {m} samples for {k} classes (m should be >> K)");
    }
    let labels: Vec<usize> = (0..k)
        .flat_map(|class| std::iter::repeat_n(class, m / k + usize::from(class < m % k)))
        .collect();
    let samples = labels
        .par_iter()
        .enumerate()
        .map(|(j, &label)| {
            let mut rng = stream_rng(seed, j as u64);
            apply_pipeline(templates.template(label), params, &mut rng)
                .map(|image| LabeledSample::new(image, label))
        })
        .collect::<Result<Vec<_>>>()?;
    SyntheticDataset::new(
        samples,
        k,
        Some(Provenance {
            theta: params.theta.clone(),
            seed,
        }),
    )
}
