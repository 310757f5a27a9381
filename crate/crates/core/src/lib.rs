//! One-shot classification from generated data.
//!
//! One template image per class is expanded into synthetic training sets by a
//! pipeline of parameterized image transforms. The transform magnitudes are
//! searched by Pareto multi-objective optimization, trading per-class
//! generalization energies (measured against a few real regularization
//! samples) against the held-out accuracy of a small classifier trained on the
//! synthetic data. Data regenerated from every Pareto-optimal parameter vector
//! trains the final classifier.

pub mod classifier;
pub mod dataset;
pub mod energy;
pub mod error;
pub mod features;
pub mod generator;
pub mod image;
pub mod io;
pub mod pareto;
pub mod rng;
pub mod trainer;

pub use classifier::{Architecture, BaseClassifier, TrainConfig};
pub use dataset::{split_dataset, LabeledSample, OneShotSet, RegularizationSet, SyntheticDataset};
pub use energy::{EnergyKind, EnergyMode, ObjectiveVector};
pub use error::{GolError, Result};
pub use features::{featurize, FeatureVector};
pub use generator::{apply_pipeline, generate, sample_params, GeneratorParams, TransformKind, VarianceSchedule};
pub use image::Image;
pub use io::DatasetManifest;
pub use pareto::{Archive, Orientation, SolutionRecord};
pub use trainer::{train_gol, GolConfig, GolResult, GolTrainer, OptimizerMode};
