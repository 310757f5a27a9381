//! Labeled sample collections: one-shot templates, regularization samples and
//! generated synthetic datasets.

use rand::seq::SliceRandom;

use crate::error::{GolError, Result};
use crate::image::Image;
use crate::rng::stream_rng;

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSample {
    pub image: Image,
    pub label: usize,
}

impl LabeledSample {
    pub fn new(image: Image, label: usize) -> Self {
        Self { image, label }
    }
}

/// Exactly one template image per class; the template for class `k` sits at index `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct OneShotSet {
    templates: Vec<Image>,
}

impl OneShotSet {
    pub fn new(entries: Vec<(Image, usize)>) -> Result<Self> {
        if entries.is_empty() {
            return Err(GolError::Empty("one-shot set"));
        }
        let k = entries.len();
        let mut slots: Vec<Option<Image>> = vec![None; k];
        for (image, label) in entries {
            if label >= k {
                return Err(GolError::config(format!(
                    "one-shot label {label} out of range for {k} templates"
                )));
            }
            if slots[label].is_some() {
                return Err(GolError::config(format!("one-shot label {label} appears twice")));
            }
            slots[label] = Some(image);
        }
        let templates: Vec<Image> = slots.into_iter().map(|s| s.expect("all labels filled")).collect();
        if templates.iter().any(|t| !t.same_shape(&templates[0])) {
            return Err(GolError::config("one-shot templates have differing shapes"));
        }
        Ok(Self { templates })
    }

    pub fn class_count(&self) -> usize {
        self.templates.len()
    }

    pub fn template(&self, class: usize) -> &Image {
        &self.templates[class]
    }

    pub fn templates(&self) -> &[Image] {
        &self.templates
    }
}

/// A small set of real labeled samples used only to score generated data.
#[derive(Debug, Clone, PartialEq)]
pub struct RegularizationSet {
    samples: Vec<LabeledSample>,
    class_count: usize,
}

impl RegularizationSet {
    pub fn new(samples: Vec<LabeledSample>, class_count: usize) -> Result<Self> {
        if let Some(s) = samples.iter().find(|s| s.label >= class_count) {
            return Err(GolError::config(format!(
                "regularization label {} out of range for {class_count} classes",
                s.label
            )));
        }
        Ok(Self {
            samples,
            class_count,
        })
    }

    pub fn samples(&self) -> &[LabeledSample] {
        &self.samples
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// The per-class counts `q_k`.
    pub fn per_class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.class_count];
        for s in &self.samples {
            counts[s.label] += 1;
        }
        counts
    }

    pub fn class(&self, class: usize) -> impl Iterator<Item = &Image> {
        self.samples
            .iter()
            .filter(move |s| s.label == class)
            .map(|s| &s.image)
    }

    /// A warning when the regularization set is not small relative to `m`
    /// generated samples.
    pub fn size_warning(&self, m: usize) -> Option<String> {
        (self.samples.len() * 10 > m).then(|| {
            format!(
                "{} regularization samples is not much smaller than {m} generated samples",
                self.samples.len()
            )
        })
    }
}

/// Generator parameters and seed that produced a synthetic dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    pub theta: Vec<f64>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticDataset {
    samples: Vec<LabeledSample>,
    class_count: usize,
    provenance: Option<Provenance>,
}

impl SyntheticDataset {
    pub fn new(
        samples: Vec<LabeledSample>,
        class_count: usize,
        provenance: Option<Provenance>,
    ) -> Result<Self> {
        if let Some(s) = samples.iter().find(|s| s.label >= class_count) {
            return Err(GolError::config(format!(
                "sample label {} out of range for {class_count} classes",
                s.label
            )));
        }
        Ok(Self {
            samples,
            class_count,
            provenance,
        })
    }

    pub fn samples(&self) -> &[LabeledSample] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<LabeledSample> {
        self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn provenance(&self) -> Option<&Provenance> {
        self.provenance.as_ref()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.class_count];
        for s in &self.samples {
            counts[s.label] += 1;
        }
        counts
    }

    /// Errors with the first class that has no samples.
    pub fn ensure_coverage(&self) -> Result<()> {
        match self.class_counts().iter().position(|&c| c == 0) {
            Some(k) => Err(GolError::MissingClass(k)),
            None => Ok(()),
        }
    }

    pub fn class(&self, class: usize) -> impl Iterator<Item = &Image> {
        self.samples
            .iter()
            .filter(move |s| s.label == class)
            .map(|s| &s.image)
    }
}

/// Stratified, seeded partition into `(train, holdout)`.
///
/// Each class contributes `round(n_k * holdout_fraction)` samples to the
/// holdout, clamped to `[1, n_k - 1]` so both sides keep every class. Sample
/// order within each output follows the input order.
pub fn split_dataset(
    dataset: &SyntheticDataset,
    holdout_fraction: f64,
    seed: u64,
) -> Result<(SyntheticDataset, SyntheticDataset)> {
    if !(holdout_fraction > 0.0 && holdout_fraction < 1.0) {
        return Err(GolError::config(format!(
            "holdout fraction {holdout_fraction} must lie in (0, 1)"
        )));
    }
    let k = dataset.class_count;
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (i, s) in dataset.samples.iter().enumerate() {
        by_class[s.label].push(i);
    }
    let mut in_holdout = vec![false; dataset.samples.len()];
    for (class, indices) in by_class.iter_mut().enumerate() {
        let n = indices.len();
        if n < 2 {
            return Err(GolError::ClassTooSmall { class, count: n });
        }
        let take = ((n as f64 * holdout_fraction).round() as usize).clamp(1, n - 1);
        indices.shuffle(&mut stream_rng(seed, class as u64));
        for &i in &indices[..take] {
            in_holdout[i] = true;
        }
    }
    let (mut train, mut holdout) = (Vec::new(), Vec::new());
    for (s, &h) in dataset.samples.iter().zip(&in_holdout) {
        if h {
            holdout.push(s.clone());
        } else {
            train.push(s.clone());
        }
    }
    Ok((
        SyntheticDataset::new(train, k, dataset.provenance.clone())?,
        SyntheticDataset::new(holdout, k, dataset.provenance.clone())?,
    ))
}
