use std::path::Path;

use anyhow::{Context, Result};
use gol_core::io::{read_archive, save_image, DatasetManifest, ManifestRow};
use gol_core::pareto::pareto_front;
use gol_core::{generate, GeneratorParams, Orientation};

use super::{create_dir, load_templates};
use crate::config::CliConfig;
use crate::{ThetaSource, UsageError};

pub fn run(cfg: &CliConfig, source: &ThetaSource, archive: Option<&Path>) -> Result<()> {
    let templates = load_templates(cfg)?;
    let (params, seed) = resolve_theta(cfg, source, archive)?;
    let m = cfg.gol.samples;
    let data = generate(&templates.set, &params, m, seed)?;

    let out = &cfg.out_dir;
    let mut rows = Vec::with_capacity(data.len());
    for (j, sample) in data.samples().iter().enumerate() {
        let class_dir = format!("images/{:03}", sample.label);
        create_dir(&out.join(&class_dir))?;
        let path = format!("{class_dir}/{j:06}.png");
        save_image(&sample.image, &out.join(&path))?;
        rows.push(ManifestRow {
            path,
            class: sample.label,
            class_name: templates.class_names[sample.label].clone(),
        });
    }
    DatasetManifest::new(out, rows).write(&out.join("manifest.txt"))?;
    eprintln!(
        "wrote {m} samples ({} classes, seed {seed}) to {}",
        templates.set.class_count(),
        out.display()
    );
    Ok(())
}

fn resolve_theta(cfg: &CliConfig, source: &ThetaSource, archive: Option<&Path>) -> Result<(GeneratorParams, u64)> {
    let template = &cfg.gol.mean;
    if source.identity {
        let params = template
            .with_theta(vec![0.0; template.theta.len()])
            .map_err(|e| UsageError(format!("identity parameters violate the configured bounds: {e}")))?;
        return Ok((params, cfg.gol.seed));
    }
    if let Some(index) = source.front_index {
        let path = archive.ok_or_else(|| UsageError("--front-index needs --archive".into()))?;
        let records = read_archive(path)?;
        let front = pareto_front(records.records(), Orientation::Maximize)?;
        let record = front.get(index).ok_or_else(|| {
            UsageError(format!("front index {index} out of range (front has {} members)", front.len()))
        })?;
        return Ok((template.with_theta(record.theta.clone())?, record.seed));
    }
    let path = source.theta_file.as_deref().expect("clap requires one theta source");
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let theta = text
        .split(|c: char| c.is_whitespace() || c == ',')
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| UsageError(format!("{}: '{t}' is not a number", path.display())))
        })
        .collect::<Result<Vec<f64>, _>>()?;
    Ok((template.with_theta(theta)?, cfg.gol.seed))
}
