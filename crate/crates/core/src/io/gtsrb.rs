//! Traffic-sign dataset ingestion.
//!
//! Expected layout: one folder per class under the root, each holding PPM
//! images and a semicolon-separated annotation file (`*.csv`) whose first
//! line is exactly [`HEADER`].

use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::image_io::{load_image, save_image};
use super::manifest::{load_one_shot, DatasetManifest, ManifestRow, Shape};
use crate::dataset::{LabeledSample, OneShotSet, RegularizationSet};
use crate::error::{GolError, Result};

pub const HEADER: &str = "Filename;Width;Height;Roi.X1;Roi.Y1;Roi.X2;Roi.Y2;ClassId";

/// One annotation row. The region of interest is inclusive on both corners.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GtsrbAnnotation {
    pub filename: String,
    pub width: usize,
    pub height: usize,
    pub roi: (usize, usize, usize, usize),
    pub class_id: usize,
}

impl GtsrbAnnotation {
    fn check(&self) -> std::result::Result<(), String> {
        let (x1, y1, x2, y2) = self.roi;
        if x1 >= x2 || y1 >= y2 {
            return Err(format!("empty region of interest ({x1},{y1})-({x2},{y2})"));
        }
        if x2 >= self.width || y2 >= self.height {
            return Err(format!(
                "region of interest ({x1},{y1})-({x2},{y2}) exceeds {}x{} image",
                self.width, self.height
            ));
        }
        Ok(())
    }
}

/// Parses annotation text; errors carry `path` and the 1-based line number.
pub fn parse_annotations(text: &str, path: &Path) -> Result<Vec<GtsrbAnnotation>> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(b';')
        .has_headers(false)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 1;
        let record = record.map_err(|e| {
            let line = e.position().map_or(line, |p| p.line() as usize);
            GolError::parse(path, line, e.to_string())
        })?;
        let line = record.position().map_or(line, |p| p.line() as usize);
        if i == 0 {
            let header: Vec<&str> = record.iter().collect();
            if header.join(";") != HEADER {
                return Err(GolError::parse(path, line, format!("expected header '{HEADER}'")));
            }
            continue;
        }
        if record.iter().all(|f| f.trim().is_empty()) {
            continue;
        }
        if record.len() != 8 {
            return Err(GolError::parse(path, line, format!("expected 8 fields, found {}", record.len())));
        }
        let num = |idx: usize, name: &str| -> Result<usize> {
            record[idx]
                .trim()
                .parse()
                .map_err(|_| GolError::parse(path, line, format!("bad {name} '{}'", &record[idx])))
        };
        let annotation = GtsrbAnnotation {
            filename: record[0].trim().to_string(),
            width: num(1, "Width")?,
            height: num(2, "Height")?,
            roi: (num(3, "Roi.X1")?, num(4, "Roi.Y1")?, num(5, "Roi.X2")?, num(6, "Roi.Y2")?),
            class_id: num(7, "ClassId")?,
        };
        annotation.check().map_err(|msg| GolError::parse(path, line, msg))?;
        rows.push(annotation);
    }
    Ok(rows)
}

pub fn read_annotations(path: &Path) -> Result<Vec<GtsrbAnnotation>> {
    let text = std::fs::read_to_string(path).map_err(|e| GolError::io(path, e))?;
    parse_annotations(&text, path)
}

#[derive(Debug, Clone, PartialEq)]
pub struct IngestOptions {
    /// Working resolution every crop is resized to.
    pub shape: Shape,
    /// The first this many images of each class (in annotation order) form
    /// the regularization set.
    pub regularization_per_class: usize,
    /// Optional template manifest to load alongside.
    pub templates: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct Ingested {
    pub templates: Option<OneShotSet>,
    pub regularization: RegularizationSet,
    /// Every ingested image.
    pub manifest: DatasetManifest,
    /// The regularization subset.
    pub regularization_manifest: DatasetManifest,
}

/// The annotated class folders under `root`, sorted by name.
pub fn class_folders(root: &Path) -> Result<Vec<PathBuf>> {
    let entries = std::fs::read_dir(root).map_err(|e| GolError::io(root, e))?;
    let mut folders = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| GolError::io(root, e))?.path();
        if path.is_dir() {
            folders.push(path);
        }
    }
    folders.sort();
    if folders.is_empty() {
        return Err(GolError::config(format!("no class folders under {}", root.display())));
    }
    Ok(folders)
}

fn annotation_file(folder: &Path) -> Result<Option<PathBuf>> {
    let entries = std::fs::read_dir(folder).map_err(|e| GolError::io(folder, e))?;
    let mut csvs = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| GolError::io(folder, e))?.path();
        if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
            csvs.push(path);
        }
    }
    csvs.sort();
    Ok(csvs.into_iter().next())
}

fn folder_name(folder: &Path) -> String {
    folder.file_name().map_or_else(String::new, |n| n.to_string_lossy().into_owned())
}

/// Crops each annotated image to its region of interest, resizes it to the
/// working resolution and writes it as PNG under `out_dir/images/<class>/`.
/// Writes `manifest.txt` (all images) and `regularization.txt` to `out_dir`.
/// Output depends only on the input tree, so re-running is idempotent.
pub fn ingest_gtsrb(root: &Path, out_dir: &Path, opts: &IngestOptions) -> Result<Ingested> {
    let folders = class_folders(root)?;
    let mut rows = Vec::new();
    let mut reg_rows = Vec::new();
    let mut reg_samples = Vec::new();
    for (class, folder) in folders.iter().enumerate() {
        let name = folder_name(folder);
        let csv_path = annotation_file(folder)?
            .ok_or_else(|| GolError::config(format!("class folder '{name}' has no annotation file")))?;
        let annotations = read_annotations(&csv_path)?;
        if annotations.is_empty() {
            return Err(GolError::config(format!("class folder '{name}' has no annotated images")));
        }
        if let Some(a) = annotations.iter().find(|a| a.class_id != class) {
            return Err(GolError::config(format!(
                "{}: image {} has class id {}, but folder '{name}' is class {class} in sorted order",
                csv_path.display(),
                a.filename,
                a.class_id
            )));
        }
        let out_class = out_dir.join("images").join(&name);
        std::fs::create_dir_all(&out_class).map_err(|e| GolError::io(&out_class, e))?;
        let crops: Vec<(String, LabeledSample)> = annotations
            .par_iter()
            .map(|a| {
                let source = folder.join(&a.filename);
                let image = load_image(&source)?;
                if (image.width(), image.height()) != (a.width, a.height) {
                    return Err(GolError::config(format!(
                        "{}: annotated size {}x{} differs from file size {}x{}",
                        source.display(),
                        a.width,
                        a.height,
                        image.width(),
                        image.height()
                    )));
                }
                let (x1, y1, x2, y2) = a.roi;
                let cropped = opts.shape.conform(&image.crop(x1, y1, x2, y2)?)?;
                let stem = Path::new(&a.filename)
                    .file_stem()
                    .map_or_else(|| a.filename.clone(), |s| s.to_string_lossy().into_owned());
                let relative = format!("images/{name}/{stem}.png");
                save_image(&cropped, &out_dir.join(&relative))?;
                Ok((relative, LabeledSample::new(cropped, class)))
            })
            .collect::<Result<_>>()?;
        for (i, (path, sample)) in crops.into_iter().enumerate() {
            let row = ManifestRow {
                path,
                class,
                class_name: name.clone(),
            };
            if i < opts.regularization_per_class {
                reg_rows.push(row.clone());
                reg_samples.push(sample);
            }
            rows.push(row);
        }
    }
    let manifest = DatasetManifest::new(out_dir, rows);
    manifest.write(&out_dir.join("manifest.txt"))?;
    let regularization_manifest = DatasetManifest::new(out_dir, reg_rows);
    regularization_manifest.write(&out_dir.join("regularization.txt"))?;
    let templates = opts
        .templates
        .as_deref()
        .map(|path| load_one_shot(path, Some(opts.shape)))
        .transpose()?;
    Ok(Ingested {
        templates,
        regularization: RegularizationSet::new(reg_samples, folders.len())?,
        manifest,
        regularization_manifest,
    })
}
