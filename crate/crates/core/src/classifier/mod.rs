//! The base classifier: a small softmax network trained by backpropagation
//! on synthetic data. Its held-out accuracy is one of the search objectives.

mod arch;
pub mod checkpoint;
mod network;

use rand::seq::SliceRandom;

pub use arch::{Architecture, Layer};
pub use network::{softmax, Network, Trace};

use crate::dataset::SyntheticDataset;
use crate::error::{GolError, Result};
use crate::image::Image;
use crate::rng::{derive_seed, stream_rng};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub batch_size: usize,
    /// Fraction of synthetic data held out to measure the accuracy objective.
    pub holdout_fraction: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 300,
            learning_rate: 0.01,
            momentum: 0.9,
            batch_size: 32,
            holdout_fraction: 0.2,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(GolError::config("epochs must be >= 1"));
        }
        if self.batch_size == 0 {
            return Err(GolError::config("batch size must be >= 1"));
        }
        if !(self.holdout_fraction > 0.0 && self.holdout_fraction < 1.0) {
            return Err(GolError::config(format!(
                "holdout fraction {} must lie in (0, 1)",
                self.holdout_fraction
            )));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(GolError::config("learning rate must be positive"));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(GolError::config("momentum must lie in [0, 1)"));
        }
        Ok(())
    }
}

/// Mean training cross-entropy per epoch.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainReport {
    pub epoch_losses: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaseClassifier {
    network: Network,
    trained: bool,
}

impl BaseClassifier {
    /// A freshly initialized classifier that refuses to predict until trained.
    pub fn untrained(arch: &Architecture, seed: u64) -> Result<Self> {
        Ok(Self {
            network: Network::initialized(arch, seed)?,
            trained: false,
        })
    }

    /// Wraps a network with fixed weights (loaded or hand-set) as ready to predict.
    pub fn from_network(network: Network) -> Self {
        Self {
            network,
            trained: true,
        }
    }

    pub fn network(&self) -> &Network {
        &self.network
    }

    pub fn is_trained(&self) -> bool {
        self.trained
    }

    pub fn classes(&self) -> usize {
        self.network.architecture().classes
    }

    pub fn predict_proba(&self, image: &Image) -> Result<Vec<f64>> {
        if !self.trained {
            return Err(GolError::Untrained);
        }
        let input = self.network.input_tensor(image)?;
        Ok(softmax(&self.network.logits(&input)))
    }

    /// Most probable class; ties go to the lowest index.
    pub fn predict(&self, image: &Image) -> Result<usize> {
        Ok(argmax(&self.predict_proba(image)?))
    }

    /// Fraction of samples whose predicted class equals the label.
    pub fn accuracy(&self, eval: &SyntheticDataset) -> Result<f64> {
        if eval.is_empty() {
            return Err(GolError::Empty("accuracy evaluation set"));
        }
        let mut correct = 0usize;
        for s in eval.samples() {
            if self.predict(&s.image)? == s.label {
                correct += 1;
            }
        }
        Ok(correct as f64 / eval.len() as f64)
    }
}

/// Index of the first maximum.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

pub fn train(arch: &Architecture, dataset: &SyntheticDataset, cfg: &TrainConfig) -> Result<BaseClassifier> {
    train_with_report(arch, dataset, cfg).map(|(c, _)| c)
}

/// Mini-batch SGD with momentum on mean cross-entropy.
pub fn train_with_report(
    arch: &Architecture,
    dataset: &SyntheticDataset,
    cfg: &TrainConfig,
) -> Result<(BaseClassifier, TrainReport)> {
    cfg.validate()?;
    if dataset.is_empty() {
        return Err(GolError::Empty("training set"));
    }
    if dataset.class_count() != arch.classes {
        return Err(GolError::DimensionMismatch {
            context: "training set classes",
            expected: arch.classes,
            found: dataset.class_count(),
        });
    }
    dataset.ensure_coverage()?;

    let mut network = Network::initialized(arch, derive_seed(cfg.seed, &[0]))?;
    let inputs: Vec<Vec<f64>> = dataset
        .samples()
        .iter()
        .map(|s| network.input_tensor(&s.image))
        .collect::<Result<_>>()?;
    let labels: Vec<usize> = dataset.samples().iter().map(|s| s.label).collect();

    let shuffle_seed = derive_seed(cfg.seed, &[1]);
    let mut order: Vec<usize> = (0..inputs.len()).collect();
    let mut velocity = vec![0.0; network.param_count()];
    let mut grad = vec![0.0; network.param_count()];
    let mut report = TrainReport::default();

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut stream_rng(shuffle_seed, epoch as u64));
        let mut epoch_loss = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            grad.fill(0.0);
            for &i in batch {
                epoch_loss += network.backward(&inputs[i], labels[i], &mut grad);
            }
            let scale = cfg.learning_rate / batch.len() as f64;
            for ((p, v), g) in network.params_mut().iter_mut().zip(&mut velocity).zip(&grad) {
                *v = cfg.momentum * *v - scale * g;
                *p += *v;
            }
        }
        report.epoch_losses.push(epoch_loss / inputs.len() as f64);
    }
    Ok((
        BaseClassifier {
            network,
            trained: true,
        },
        report,
    ))
}
