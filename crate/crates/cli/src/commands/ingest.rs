use std::path::{Path, PathBuf};

use anyhow::Result;
use gol_core::io::{ingest_gtsrb, IngestOptions, Shape};

use super::create_dir;
use crate::config::CliConfig;
use crate::UsageError;

pub fn run(
    cfg: &CliConfig,
    root: &Path,
    shape: Shape,
    regularization_per_class: usize,
    templates: Option<&Path>,
) -> Result<()> {
    if !(shape.channels == 1 || shape.channels == 3) || shape.width == 0 || shape.height == 0 {
        return Err(UsageError("working resolution needs positive size and 1 or 3 channels".into()).into());
    }
    create_dir(&cfg.out_dir)?;
    let opts = IngestOptions {
        shape,
        regularization_per_class,
        templates: templates.map(PathBuf::from),
    };
    let ingested = ingest_gtsrb(root, &cfg.out_dir, &opts)?;
    if let Some(t) = &ingested.templates {
        if t.class_count() != ingested.manifest.class_count() {
            return Err(UsageError(format!(
                "template manifest has {} classes, the dataset {}",
                t.class_count(),
                ingested.manifest.class_count()
            ))
            .into());
        }
    }
    eprintln!(
        "ingested {} images in {} classes ({} regularization samples) into {}",
        ingested.manifest.rows.len(),
        ingested.manifest.class_count(),
        ingested.regularization.len(),
        cfg.out_dir.display()
    );
    Ok(())
}
