use std::path::Path;

use anyhow::{Context, Result};
use gol_core::classifier::checkpoint;
use gol_core::io::records::{load_checkpoint, read_metrics, save_checkpoint, write_archive, write_metrics};
use gol_core::io::{export_montage, export_objective_csv, montage_rows, save_image, DatasetManifest, ManifestRow};
use gol_core::trainer::CandidateMetrics;
use gol_core::{generate, GolConfig, GolTrainer, Orientation, SolutionRecord, SyntheticDataset};
use serde::Serialize;

use super::{create_dir, load_regularization, load_templates, Templates};
use crate::config::CliConfig;

/// Written to `summary.json` at the end of a run.
#[derive(Debug, Serialize)]
struct Summary {
    seed: u64,
    config_hash: String,
    episodes: usize,
    candidates: usize,
    archive_records: usize,
    front_size: usize,
    optimal_size: usize,
    /// Accuracy on the held-out part of the pooled regenerated data.
    final_holdout_accuracy: f64,
    /// The same, measured on the 8-bit images written to `final_holdout/`.
    saved_holdout_accuracy: f64,
}

pub fn run(cfg: &CliConfig, resume: bool) -> Result<()> {
    let templates = load_templates(cfg)?;
    let regularization = load_regularization(cfg, &templates)?;
    let shape = templates.shape;
    let gol = GolConfig {
        arch: cfg.arch_for(shape.width, shape.height, shape.channels),
        ..cfg.gol.clone()
    };
    let out = &cfg.out_dir;
    create_dir(out)?;
    let checkpoint_path = out.join("checkpoint.json");
    let archive_path = out.join("archive.jsonl");
    let metrics_path = out.join("metrics.jsonl");

    let mut earlier_metrics = Vec::new();
    let mut trainer = if resume && checkpoint_path.exists() {
        let cp = load_checkpoint(&checkpoint_path)?;
        let next = cp.next_episode;
        if metrics_path.exists() {
            earlier_metrics = read_metrics(&metrics_path)?;
            earlier_metrics.retain(|m| m.episode < next);
        }
        eprintln!("resuming at episode {next}");
        GolTrainer::resume(&templates.set, &regularization, gol.clone(), cp)?
    } else {
        GolTrainer::new(&templates.set, &regularization, gol.clone())?
    };

    while !trainer.is_finished() {
        let t = trainer.next_episode();
        let started = std::time::Instant::now();
        let best = trainer
            .run_episode()?
            .iter()
            .map(|r| r.objectives.accuracy())
            .fold(0.0, f64::max);
        eprintln!(
            "episode {t}/{}: best accuracy {best:.3}, front {} of {} ({:.1}s)",
            gol.episodes,
            trainer.front()?.len(),
            trainer.archive().len(),
            started.elapsed().as_secs_f64()
        );
        save_checkpoint(&trainer.checkpoint(), &checkpoint_path)?;
        write_archive(trainer.archive(), &archive_path)?;
        write_metrics(&all_metrics(&earlier_metrics, trainer.metrics()), &metrics_path)?;
    }

    let stage_records = stage_best(trainer.archive().records(), gol.episodes);
    eprintln!("regenerating data for the Pareto-optimal parameters and training the final classifier");
    let result = trainer.finish()?;

    write_archive(&result.archive, &archive_path)?;
    write_metrics(&all_metrics(&earlier_metrics, &result.metrics), &metrics_path)?;
    export_objective_csv(&result.archive, Orientation::Maximize, &out.join("front.csv"))?;
    checkpoint::save(&result.classifier, &out.join("model.txt"))?;

    let montages = out.join("montages");
    create_dir(&montages)?;
    for record in &stage_records {
        let params = gol.mean.with_theta(record.theta.clone())?;
        let data = generate(&templates.set, &params, gol.samples, record.seed)?;
        let rows = montage_rows(&templates.set, &data, cfg.montage_samples);
        export_montage(&rows, &montages.join(format!("episode_{:03}.png", record.episode)))?;
    }
    let rows = montage_rows(&templates.set, &result.final_holdout, cfg.montage_samples);
    export_montage(&rows, &montages.join("final.png"))?;

    let saved_holdout_accuracy = write_holdout(&templates, &result.final_holdout, out, &result.classifier)?;
    let summary = Summary {
        seed: gol.seed,
        config_hash: gol.fingerprint(),
        episodes: gol.episodes,
        candidates: gol.candidates,
        archive_records: result.archive.len(),
        front_size: result.front.len(),
        optimal_size: result.optimal.len(),
        final_holdout_accuracy: result.final_holdout_accuracy,
        saved_holdout_accuracy,
    };
    let summary_path = out.join("summary.json");
    std::fs::write(&summary_path, serde_json::to_string_pretty(&summary)? + "\n")
        .with_context(|| format!("cannot write {}", summary_path.display()))?;
    eprintln!(
        "done: {} records, front {}, final holdout accuracy {:.4}; outputs in {}",
        summary.archive_records,
        summary.front_size,
        summary.final_holdout_accuracy,
        out.display()
    );
    Ok(())
}

fn all_metrics(earlier: &[CandidateMetrics], current: &[CandidateMetrics]) -> Vec<CandidateMetrics> {
    earlier.iter().chain(current).cloned().collect()
}

/// The most accurate record of the first, middle and last episode.
fn stage_best(records: &[SolutionRecord], episodes: usize) -> Vec<SolutionRecord> {
    let mut stages = vec![1, episodes.div_ceil(2), episodes];
    stages.dedup();
    stages
        .into_iter()
        .filter_map(|t| {
            records
                .iter()
                .filter(|r| r.episode == t)
                .reduce(|best, r| if r.objectives.accuracy() > best.objectives.accuracy() { r } else { best })
                .cloned()
        })
        .collect()
}

/// Writes the final holdout as PNGs plus a manifest and returns the model's
/// accuracy on the written (8-bit) images.
fn write_holdout(
    templates: &Templates,
    holdout: &SyntheticDataset,
    out: &Path,
    classifier: &gol_core::BaseClassifier,
) -> Result<f64> {
    let dir = out.join("final_holdout");
    create_dir(&dir)?;
    let mut rows = Vec::with_capacity(holdout.len());
    for (i, sample) in holdout.samples().iter().enumerate() {
        let name = format!("{:05}_{}.png", i, sample.label);
        save_image(&sample.image, &dir.join(&name))?;
        rows.push(ManifestRow {
            path: format!("final_holdout/{name}"),
            class: sample.label,
            class_name: templates.class_names[sample.label].clone(),
        });
    }
    let manifest = DatasetManifest::new(out, rows);
    let manifest_path = out.join("final_holdout.txt");
    manifest.write(&manifest_path)?;
    let reloaded = gol_core::io::load_labeled(&manifest_path, templates.shape, templates.set.class_count())?;
    Ok(classifier.accuracy(&reloaded)?)
}
