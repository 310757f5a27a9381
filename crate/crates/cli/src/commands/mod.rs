mod eval;
mod front;
mod generate;
mod ingest;
mod train;

use std::path::Path;

use anyhow::{Context, Result};
use gol_core::io::{DatasetManifest, Shape};
use gol_core::{OneShotSet, RegularizationSet};

pub use eval::{evaluate, EvalReport};

use crate::config::{CliConfig, Overrides};
use crate::{Cli, Command, EnergyArg, GlobalArgs, ModeArg, UsageError};

pub fn dispatch(cli: Cli) -> Result<()> {
    let cfg = load_config(&cli.global)?;
    // commands other than train parallelize through the global pool
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.gol.threads)
        .build_global();
    match cli.command {
        Command::Train { resume } => train::run(&cfg, resume),
        Command::Generate { source, archive } => generate::run(&cfg, &source, archive.as_deref()),
        Command::Front { archive, csv } => front::run(&archive, csv.as_deref()),
        Command::Eval {
            model,
            manifest,
            categories,
        } => eval::run(&model, &manifest, categories.as_deref()),
        Command::IngestGtsrb {
            root,
            width,
            height,
            channels,
            regularization_per_class,
            templates,
        } => ingest::run(
            &cfg,
            &root,
            Shape {
                width,
                height,
                channels,
            },
            regularization_per_class,
            templates.as_deref(),
        ),
    }
}

pub fn load_config(global: &GlobalArgs) -> Result<CliConfig> {
    let overrides = Overrides {
        seed: global.seed,
        threads: global.threads,
        episodes: global.episodes,
        candidates: global.candidates,
        samples: global.samples,
        energy: global.energy.map(|e| {
            match e {
                EnergyArg::Bhattacharyya => "bhattacharyya",
                EnergyArg::Qnorm => "qnorm",
                EnergyArg::Loglik => "loglik",
            }
            .to_string()
        }),
        mode: global.mode.map(|m| {
            match m {
                ModeArg::VarianceSearch => "variance-search",
                ModeArg::Evolutionary => "evolutionary",
                ModeArg::Scalarized => "scalarized",
            }
            .to_string()
        }),
        out: global.out.clone(),
        set: global.set.clone(),
    };
    Ok(CliConfig::load(global.config.as_deref(), &overrides)?)
}

/// Templates conformed to the working resolution, with class names.
pub struct Templates {
    pub set: OneShotSet,
    pub shape: Shape,
    pub class_names: Vec<String>,
}

pub fn load_templates(cfg: &CliConfig) -> Result<Templates> {
    let path = cfg
        .templates
        .as_deref()
        .ok_or_else(|| UsageError("no template manifest given (data.templates)".into()))?;
    let manifest = DatasetManifest::read(path)?;
    let samples = manifest.load_samples(None)?;
    let first = Shape::of(&samples[0].image);
    let shape = Shape {
        width: cfg.width.unwrap_or(first.width),
        height: cfg.height.unwrap_or(first.height),
        channels: cfg.channels.unwrap_or(first.channels),
    };
    let entries = samples
        .into_iter()
        .map(|s| Ok((shape.conform(&s.image)?, s.label)))
        .collect::<gol_core::Result<Vec<_>>>()?;
    let set = OneShotSet::new(entries)
        .map_err(|e| UsageError(format!("template manifest {}: {e}", path.display())))?;
    Ok(Templates {
        set,
        shape,
        class_names: manifest.class_names(),
    })
}

pub fn load_regularization(cfg: &CliConfig, templates: &Templates) -> Result<RegularizationSet> {
    let path = cfg
        .regularization
        .as_deref()
        .ok_or_else(|| UsageError("no regularization manifest given (data.regularization)".into()))?;
    Ok(gol_core::io::load_regularization(
        path,
        templates.shape,
        templates.set.class_count(),
    )?)
}

pub(crate) fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))
}
