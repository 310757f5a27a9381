//! The optimization loop: propose generator parameters, generate data, train
//! and score a classifier per candidate, archive every result, and finally
//! train one classifier on data regenerated from the Pareto-optimal set.

mod selection;

use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use selection::{make_offspring, select_next_generation, survivor_indices};

use crate::classifier::{self, Architecture, BaseClassifier, TrainConfig};
use crate::dataset::{split_dataset, OneShotSet, RegularizationSet, SyntheticDataset};
use crate::energy::{evaluate_objectives, EnergyMode};
use crate::error::{GolError, Result};
use crate::generator::{default_bounds, generate, sample_params, GeneratorParams, VarianceSchedule};
use crate::pareto::{pareto_front, scalarize, Archive, Orientation, ScalarizationWeights, SolutionRecord};
use crate::rng::{derive_seed, stream_rng};

/// Seed path component reserved for the final classifier.
const FINAL_STREAM: u64 = u64::MAX;

#[derive(Debug, Clone, PartialEq, Default)]
pub enum OptimizerMode {
    /// Sample around a fixed mean with a variance that grows every episode.
    #[default]
    VarianceSearch,
    /// Crossover and mutation of a survivor population ranked by front and crowding.
    Evolutionary,
    /// Re-centre the sampling mean on the best weighted sum of objectives so far.
    Scalarized(ScalarizationWeights),
}

impl OptimizerMode {
    pub fn name(&self) -> &'static str {
        match self {
            OptimizerMode::VarianceSearch => "variance-search",
            OptimizerMode::Evolutionary => "evolutionary",
            OptimizerMode::Scalarized(_) => "scalarized",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GolConfig {
    pub episodes: usize,
    pub candidates: usize,
    /// Synthetic samples generated per candidate (and per front member at the end).
    pub samples: usize,
    pub energy: EnergyMode,
    /// Sampling mean; also carries the parameter bounds.
    pub mean: GeneratorParams,
    pub schedule: VarianceSchedule,
    /// Training settings for each candidate's classifier. The seed is ignored;
    /// per-candidate seeds derive from `seed`.
    pub train: TrainConfig,
    /// Training settings for the final classifier (seed ignored likewise).
    pub final_train: TrainConfig,
    /// Classifier architecture text, e.g. `32x32x1:conv5x5x8,pool2,fc64`.
    pub arch: String,
    pub mode: OptimizerMode,
    pub seed: u64,
    /// Worker threads for candidate evaluation; 0 uses all cores.
    pub threads: usize,
    /// Keep at most this many Pareto-optimal parameters for the final
    /// regeneration, chosen by crowding distance.
    pub front_cap: Option<usize>,
}

impl Default for GolConfig {
    fn default() -> Self {
        let bounds = default_bounds();
        Self {
            episodes: 30,
            candidates: 16,
            samples: 500,
            energy: EnergyMode::default(),
            schedule: VarianceSchedule::proportional(&bounds, 0.05, 0.02).expect("valid fractions"),
            mean: GeneratorParams::identity(),
            train: TrainConfig::default(),
            final_train: TrainConfig::default(),
            arch: Architecture::default_for(2).spec(),
            mode: OptimizerMode::default(),
            seed: 0,
            threads: 0,
            front_cap: None,
        }
    }
}

impl GolConfig {
    /// Checks everything that does not depend on the data.
    pub fn validate(&self) -> Result<()> {
        if self.episodes == 0 {
            return Err(GolError::config("episodes must be >= 1"));
        }
        if self.candidates == 0 {
            return Err(GolError::config("candidates per episode must be >= 1"));
        }
        if self.front_cap == Some(0) {
            return Err(GolError::config("front cap must be >= 1"));
        }
        self.energy.validate()?;
        self.mean.validate()?;
        self.train.validate()?;
        self.final_train.validate()?;
        Architecture::parse(&self.arch, 2)?;
        Ok(())
    }

    /// SHA-256 over every setting that influences the archive. Episode count
    /// and thread count are excluded so a run can be extended or resumed on
    /// another machine.
    pub fn fingerprint(&self) -> String {
        let canonical = format!(
            "candidates={}\nsamples={}\nenergy={:?}\nmean={:?}\nbounds={:?}\nsigma0={:?}\ndelta={:?}\n\
             train={:?}\narch={}\nmode={:?}\nseed={}\n",
            self.candidates,
            self.samples,
            self.energy,
            self.mean.theta,
            self.mean.bounds,
            self.schedule.sigma0(),
            self.schedule.delta(),
            TrainConfig { seed: 0, ..self.train.clone() },
            self.arch,
            self.mode,
            self.seed,
        );
        hex(&Sha256::digest(canonical.as_bytes()))
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().fold(String::with_capacity(bytes.len() * 2), |mut s, b| {
        write!(s, "{b:02x}").expect("write to string");
        s
    })
}

/// One metrics-log line per evaluated candidate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateMetrics {
    pub episode: usize,
    pub candidate: usize,
    pub energies: Vec<f64>,
    pub accuracy: f64,
    pub wall_ms: f64,
}

/// Everything needed to continue a run: the archive plus the identity of
/// the configuration that produced it. All randomness derives from
/// `(seed, episode, candidate)`, so no generator state is stored.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainerCheckpoint {
    pub config_hash: String,
    pub seed: u64,
    pub next_episode: usize,
    pub records: Vec<SolutionRecord>,
}

#[derive(Debug, Clone)]
pub struct GolResult {
    pub archive: Archive,
    /// Non-dominated records of the archive.
    pub front: Vec<SolutionRecord>,
    /// Records whose parameters fed the final regeneration.
    pub optimal: Vec<SolutionRecord>,
    pub classifier: BaseClassifier,
    /// Held-out part of the pooled regenerated data.
    pub final_holdout: SyntheticDataset,
    pub final_holdout_accuracy: f64,
    pub metrics: Vec<CandidateMetrics>,
}

impl GolResult {
    pub fn optimal_params(&self, bounds: &GeneratorParams) -> Result<Vec<GeneratorParams>> {
        self.optimal.iter().map(|r| bounds.with_theta(r.theta.clone())).collect()
    }
}

/// Stepwise driver; `train_gol` runs it to completion.
pub struct GolTrainer<'a> {
    templates: &'a OneShotSet,
    regularization: &'a RegularizationSet,
    config: GolConfig,
    arch: Architecture,
    archive: Archive,
    metrics: Vec<CandidateMetrics>,
    /// Survivors carried between episodes in evolutionary mode.
    population: Vec<SolutionRecord>,
    next_episode: usize,
    pool: rayon::ThreadPool,
}

impl<'a> GolTrainer<'a> {
    pub fn new(templates: &'a OneShotSet, regularization: &'a RegularizationSet, config: GolConfig) -> Result<Self> {
        config.validate()?;
        let k = templates.class_count();
        if k < 2 {
            return Err(GolError::config(format!("need at least 2 classes, got {k}")));
        }
        if regularization.class_count() != k {
            return Err(GolError::DimensionMismatch {
                context: "regularization classes",
                expected: k,
                found: regularization.class_count(),
            });
        }
        if let Some(class) = regularization.per_class_counts().iter().position(|&n| n == 0) {
            return Err(GolError::config(format!("no regularization samples for class {class}")));
        }
        if config.samples < 2 * k {
            return Err(GolError::config(format!(
                "samples per candidate ({}) must be at least 2 per class ({})",
                config.samples,
                2 * k
            )));
        }
        if let OptimizerMode::Scalarized(w) = &config.mode {
            if w.values().len() != k + 1 {
                return Err(GolError::DimensionMismatch {
                    context: "scalarization weights (K energies + accuracy)",
                    expected: k + 1,
                    found: w.values().len(),
                });
            }
        }
        let arch = Architecture::parse(&config.arch, k)?;
        let t = templates.template(0);
        if (arch.width, arch.height, arch.channels) != (t.width(), t.height(), t.channels()) {
            return Err(GolError::config(format!(
                "architecture input {}x{}x{} does not match template shape {}x{}x{}",
                arch.width,
                arch.height,
                arch.channels,
                t.width(),
                t.height(),
                t.channels()
            )));
        }
        if let Some(warning) = regularization.size_warning(config.samples) {
            log::warn!("{warning}");
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.threads)
            .build()
            .map_err(|e| GolError::config(format!("cannot start worker pool: {e}")))?;
        Ok(Self {
            templates,
            regularization,
            config,
            arch,
            archive: Archive::new(),
            metrics: Vec::new(),
            population: Vec::new(),
            next_episode: 1,
            pool,
        })
    }

    /// Continues from a checkpoint. Existing records keep their objectives,
    /// even if the regularization set has changed since they were scored.
    pub fn resume(
        templates: &'a OneShotSet,
        regularization: &'a RegularizationSet,
        config: GolConfig,
        checkpoint: TrainerCheckpoint,
    ) -> Result<Self> {
        let hash = config.fingerprint();
        if checkpoint.config_hash != hash || checkpoint.seed != config.seed {
            return Err(GolError::config(
                "checkpoint was produced by a different configuration or seed",
            ));
        }
        let mut trainer = Self::new(templates, regularization, config)?;
        let archive = Archive::from_records(checkpoint.records)?;
        let done = archive.last_episode();
        if checkpoint.next_episode != done + 1 || archive.len() != done * trainer.config.candidates {
            return Err(GolError::config(format!(
                "checkpoint holds {} records through episode {done}, inconsistent with {} candidates per episode",
                archive.len(),
                trainer.config.candidates
            )));
        }
        if trainer.config.mode == OptimizerMode::Evolutionary {
            for episode in 1..=done {
                let start = (episode - 1) * trainer.config.candidates;
                let batch = &archive.records()[start..start + trainer.config.candidates];
                trainer.advance_population(batch);
            }
        }
        trainer.archive = archive;
        trainer.next_episode = done + 1;
        Ok(trainer)
    }

    pub fn config(&self) -> &GolConfig {
        &self.config
    }

    pub fn architecture(&self) -> &Architecture {
        &self.arch
    }

    pub fn archive(&self) -> &Archive {
        &self.archive
    }

    pub fn metrics(&self) -> &[CandidateMetrics] {
        &self.metrics
    }

    pub fn next_episode(&self) -> usize {
        self.next_episode
    }

    pub fn is_finished(&self) -> bool {
        self.next_episode > self.config.episodes
    }

    pub fn checkpoint(&self) -> TrainerCheckpoint {
        TrainerCheckpoint {
            config_hash: self.config.fingerprint(),
            seed: self.config.seed,
            next_episode: self.next_episode,
            records: self.archive.records().to_vec(),
        }
    }

    pub fn front(&self) -> Result<Vec<SolutionRecord>> {
        pareto_front(self.archive.records(), Orientation::Maximize)
    }

    /// Runs the next episode and returns its records. Either all candidates
    /// are archived or, on the first failing candidate, none are.
    pub fn run_episode(&mut self) -> Result<&[SolutionRecord]> {
        let t = self.next_episode;
        if self.is_finished() {
            return Err(GolError::config(format!(
                "all {} episodes have already run",
                self.config.episodes
            )));
        }
        let proposals = self.propose(t)?;
        let outcomes: Vec<Result<(SolutionRecord, CandidateMetrics)>> = self.pool.install(|| {
            proposals
                .par_iter()
                .enumerate()
                .map(|(c, params)| self.evaluate_candidate(t, c, params))
                .collect()
        });
        let mut records = Vec::with_capacity(outcomes.len());
        let mut metrics = Vec::with_capacity(outcomes.len());
        for (c, outcome) in outcomes.into_iter().enumerate() {
            let (record, metric) = outcome.map_err(|e| GolError::Candidate {
                episode: t,
                candidate: c,
                source: Box::new(e),
            })?;
            records.push(record);
            metrics.push(metric);
        }
        if self.config.mode == OptimizerMode::Evolutionary {
            self.advance_population(&records);
        }
        let start = self.archive.len();
        self.archive.append(records)?;
        self.metrics.extend(metrics);
        self.next_episode += 1;
        log::info!(
            "episode {t}/{}: archive {} records, front {}",
            self.config.episodes,
            self.archive.len(),
            self.front()?.len()
        );
        Ok(&self.archive.records()[start..])
    }

    fn advance_population(&mut self, batch: &[SolutionRecord]) {
        let mut pool = std::mem::take(&mut self.population);
        pool.extend_from_slice(batch);
        self.population = select_next_generation(&pool, self.config.candidates);
    }

    fn propose(&self, t: usize) -> Result<Vec<GeneratorParams>> {
        let cfg = &self.config;
        let proposal_seed = derive_seed(cfg.seed, &[t as u64]);
        let mean = match &cfg.mode {
            OptimizerMode::Scalarized(w) => match best_scalarized(self.archive.records(), w)?.first() {
                Some(best) => cfg.mean.with_theta(best.theta.clone())?,
                None => cfg.mean.clone(),
            },
            _ => cfg.mean.clone(),
        };
        (0..cfg.candidates)
            .map(|c| {
                let mut rng = stream_rng(proposal_seed, c as u64);
                if cfg.mode == OptimizerMode::Evolutionary && !self.population.is_empty() {
                    Ok(make_offspring(&self.population, &mean, &cfg.schedule.sigma_at(t), &mut rng))
                } else {
                    sample_params(&mean, &cfg.schedule, t, &mut rng)
                }
            })
            .collect()
    }

    fn evaluate_candidate(
        &self,
        t: usize,
        c: usize,
        params: &GeneratorParams,
    ) -> Result<(SolutionRecord, CandidateMetrics)> {
        let started = Instant::now();
        let cfg = &self.config;
        let seed = derive_seed(cfg.seed, &[t as u64, c as u64]);
        let data = generate(self.templates, params, cfg.samples, seed)?;
        let (train, holdout) = split_dataset(&data, cfg.train.holdout_fraction, derive_seed(seed, &[1]))?;
        let train_cfg = TrainConfig {
            seed: derive_seed(seed, &[2]),
            ..cfg.train.clone()
        };
        let classifier = classifier::train(&self.arch, &train, &train_cfg)?;
        let objectives = evaluate_objectives(&data, self.regularization, &classifier, &holdout, &cfg.energy)?;
        let metric = CandidateMetrics {
            episode: t,
            candidate: c,
            energies: objectives.energies().to_vec(),
            accuracy: objectives.accuracy(),
            wall_ms: started.elapsed().as_secs_f64() * 1e3,
        };
        let record = SolutionRecord {
            episode: t,
            candidate: c,
            seed,
            theta: params.theta.clone(),
            objectives,
        };
        Ok((record, metric))
    }

    /// Selects the optimal parameter set, regenerates `samples` images for
    /// each member with its recorded seed, and trains the final classifier on
    /// the pooled data.
    pub fn finish(self) -> Result<GolResult> {
        let cfg = &self.config;
        let front = self.front()?;
        let mut optimal = match &cfg.mode {
            OptimizerMode::Scalarized(w) => best_scalarized(self.archive.records(), w)?,
            _ => front.clone(),
        };
        if let Some(cap) = cfg.front_cap.filter(|&cap| optimal.len() > cap) {
            let points: Vec<&[f64]> = optimal.iter().map(|r| r.objectives.as_slice()).collect();
            let mut keep = survivor_indices(&points, cap);
            keep.sort_unstable();
            optimal = keep.into_iter().map(|i| optimal[i].clone()).collect();
        }
        let k = self.templates.class_count();
        let pooled: Vec<_> = self.pool.install(|| {
            optimal
                .par_iter()
                .map(|r| generate(self.templates, &cfg.mean.with_theta(r.theta.clone())?, cfg.samples, r.seed))
                .collect::<Result<Vec<_>>>()
        })?;
        let pooled = SyntheticDataset::new(pooled.into_iter().flat_map(|d| d.into_samples()).collect(), k, None)?;
        let final_seed = derive_seed(cfg.seed, &[FINAL_STREAM]);
        let (train, holdout) = split_dataset(
            &pooled,
            cfg.final_train.holdout_fraction,
            derive_seed(final_seed, &[1]),
        )?;
        drop(pooled);
        let train_cfg = TrainConfig {
            seed: derive_seed(final_seed, &[2]),
            ..cfg.final_train.clone()
        };
        log::info!(
            "training final classifier on {} samples from {} parameter vectors",
            train.len(),
            optimal.len()
        );
        let classifier = self.pool.install(|| classifier::train(&self.arch, &train, &train_cfg))?;
        let final_holdout_accuracy = classifier.accuracy(&holdout)?;
        Ok(GolResult {
            archive: self.archive,
            front,
            optimal,
            classifier,
            final_holdout: holdout,
            final_holdout_accuracy,
            metrics: self.metrics,
        })
    }
}

/// All records attaining the maximal weighted objective sum, in archive order.
fn best_scalarized(records: &[SolutionRecord], weights: &ScalarizationWeights) -> Result<Vec<SolutionRecord>> {
    let scores = records
        .iter()
        .map(|r| scalarize(r.objectives.as_slice(), weights))
        .collect::<Result<Vec<f64>>>()?;
    let best = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(records
        .iter()
        .zip(&scores)
        .filter(|(_, &s)| s == best)
        .map(|(r, _)| r.clone())
        .collect())
}

/// Runs every configured episode and builds the final classifier.
pub fn train_gol(templates: &OneShotSet, regularization: &RegularizationSet, config: GolConfig) -> Result<GolResult> {
    let mut trainer = GolTrainer::new(templates, regularization, config)?;
    while !trainer.is_finished() {
        trainer.run_episode()?;
    }
    trainer.finish()
}
