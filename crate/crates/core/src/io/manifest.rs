//! Line-oriented dataset manifests.
//!
//! ```text
//! gol-manifest 1
//! images/00000/a.png<TAB>0<TAB>stop
//! images/00001/b.png<TAB>1<TAB>yield
//! ```
//!
//! Paths are relative to the directory holding the manifest file.

use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::image_io::load_image;
use crate::dataset::{LabeledSample, OneShotSet, RegularizationSet, SyntheticDataset};
use crate::error::{GolError, Result};
use crate::image::Image;

pub const MAGIC: &str = "gol-manifest";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestRow {
    /// Path relative to the manifest root, `/`-separated.
    pub path: String,
    pub class: usize,
    pub class_name: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetManifest {
    pub root: PathBuf,
    pub rows: Vec<ManifestRow>,
    pub version: u32,
}

/// Target shape for loaded images; `None` keeps each file's own shape.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Shape {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
}

impl Shape {
    pub fn of(image: &Image) -> Self {
        Self {
            width: image.width(),
            height: image.height(),
            channels: image.channels(),
        }
    }

    /// Converts channels first, then resizes if needed.
    pub fn conform(&self, image: &Image) -> Result<Image> {
        let converted = image.with_channels(self.channels)?;
        if converted.width() == self.width && converted.height() == self.height {
            Ok(converted)
        } else {
            converted.resize(self.width, self.height)
        }
    }
}

impl DatasetManifest {
    pub fn new(root: impl Into<PathBuf>, rows: Vec<ManifestRow>) -> Self {
        Self {
            root: root.into(),
            rows,
            version: VERSION,
        }
    }

    /// Number of classes, `max index + 1`.
    pub fn class_count(&self) -> usize {
        self.rows.iter().map(|r| r.class + 1).max().unwrap_or(0)
    }

    /// Class name per index; the first name seen for a class wins.
    pub fn class_names(&self) -> Vec<String> {
        let mut names = vec![String::new(); self.class_count()];
        let mut seen = vec![false; names.len()];
        for r in &self.rows {
            if !seen[r.class] {
                seen[r.class] = true;
                names[r.class] = r.class_name.clone();
            }
        }
        names
    }

    pub fn resolve(&self, row: &ManifestRow) -> PathBuf {
        self.root.join(row.path.replace('/', std::path::MAIN_SEPARATOR_STR))
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{MAGIC} {}\n", self.version);
        for r in &self.rows {
            out.push_str(&format!("{}\t{}\t{}\n", r.path, r.class, r.class_name));
        }
        out
    }

    /// Parses manifest text; `root` is where relative paths resolve.
    pub fn parse(text: &str, source: &Path, root: impl Into<PathBuf>) -> Result<Self> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        let version = match lines.next() {
            Some((_, header)) => header
                .strip_prefix(MAGIC)
                .and_then(|v| v.trim().parse::<u32>().ok())
                .ok_or_else(|| GolError::parse(source, 1, format!("expected '{MAGIC} {VERSION}' header")))?,
            None => return Err(GolError::parse(source, 0, "empty manifest")),
        };
        if version != VERSION {
            return Err(GolError::parse(source, 1, format!("unsupported manifest version {version}")));
        }
        let mut rows = Vec::new();
        for (n, line) in lines {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            let [path, class, name] = fields[..] else {
                return Err(GolError::parse(source, n, "expected path<TAB>class<TAB>name"));
            };
            let class = class
                .trim()
                .parse::<usize>()
                .map_err(|_| GolError::parse(source, n, format!("bad class index '{class}'")))?;
            rows.push(ManifestRow {
                path: path.to_string(),
                class,
                class_name: name.to_string(),
            });
        }
        let manifest = Self {
            root: root.into(),
            rows,
            version,
        };
        manifest.check_classes(source)?;
        Ok(manifest)
    }

    fn check_classes(&self, source: &Path) -> Result<()> {
        if self.rows.is_empty() {
            return Err(GolError::config(format!("manifest {} lists no images", source.display())));
        }
        let mut seen = vec![false; self.class_count()];
        for r in &self.rows {
            seen[r.class] = true;
        }
        if let Some(gap) = seen.iter().position(|s| !s) {
            return Err(GolError::config(format!(
                "manifest {}: class indices must be contiguous from 0, class {gap} has no images",
                source.display()
            )));
        }
        Ok(())
    }

    /// Reads a manifest file and checks that every referenced file exists.
    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| GolError::io(path, e))?;
        let root = path.parent().unwrap_or(Path::new(".")).to_path_buf();
        let manifest = Self::parse(&text, path, root)?;
        for row in &manifest.rows {
            let file = manifest.resolve(row);
            if !file.is_file() {
                return Err(GolError::config(format!(
                    "image file {} listed in {} does not exist",
                    file.display(),
                    path.display()
                )));
            }
        }
        Ok(manifest)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| GolError::io(path, e))
    }

    /// Decodes every row (in parallel), conforming each image to `shape`.
    pub fn load_samples(&self, shape: Option<Shape>) -> Result<Vec<LabeledSample>> {
        self.rows
            .par_iter()
            .map(|row| {
                let image = load_image(&self.resolve(row))?;
                let image = match shape {
                    Some(shape) => shape.conform(&image)?,
                    None => image,
                };
                Ok(LabeledSample::new(image, row.class))
            })
            .collect()
    }
}

/// One template per class. Without an explicit shape, every template is
/// conformed to the first one's shape.
pub fn load_one_shot(path: &Path, shape: Option<Shape>) -> Result<OneShotSet> {
    let manifest = DatasetManifest::read(path)?;
    let mut samples = manifest.load_samples(shape)?;
    if shape.is_none() {
        let target = Shape::of(&samples[0].image);
        for s in &mut samples {
            s.image = target.conform(&s.image)?;
        }
    }
    OneShotSet::new(samples.into_iter().map(|s| (s.image, s.label)).collect())
        .map_err(|e| GolError::config(format!("template manifest {}: {e}", path.display())))
}

pub fn load_regularization(path: &Path, shape: Shape, class_count: usize) -> Result<RegularizationSet> {
    let manifest = DatasetManifest::read(path)?;
    check_class_count(&manifest, path, class_count)?;
    RegularizationSet::new(manifest.load_samples(Some(shape))?, class_count)
}

/// A labeled evaluation set.
pub fn load_labeled(path: &Path, shape: Shape, class_count: usize) -> Result<SyntheticDataset> {
    let manifest = DatasetManifest::read(path)?;
    check_class_count(&manifest, path, class_count)?;
    SyntheticDataset::new(manifest.load_samples(Some(shape))?, class_count, None)
}

fn check_class_count(manifest: &DatasetManifest, path: &Path, expected: usize) -> Result<()> {
    if manifest.class_count() != expected {
        return Err(GolError::config(format!(
            "{} has {} classes, expected {expected}",
            path.display(),
            manifest.class_count()
        )));
    }
    Ok(())
}
