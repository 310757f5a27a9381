use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use gol_core::classifier::checkpoint;
use gol_core::io::{DatasetManifest, Shape};
use gol_core::{BaseClassifier, LabeledSample};

use crate::UsageError;

/// Correct / total counts overall and per class.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub correct: usize,
    pub total: usize,
    pub per_class: Vec<(usize, usize)>,
}

impl EvalReport {
    pub fn accuracy(&self) -> f64 {
        self.correct as f64 / self.total as f64
    }

    pub fn class_accuracy(&self, class: usize) -> Option<f64> {
        let (c, n) = self.per_class[class];
        (n > 0).then(|| c as f64 / n as f64)
    }
}

pub fn evaluate(classifier: &BaseClassifier, samples: &[LabeledSample]) -> gol_core::Result<EvalReport> {
    let mut per_class = vec![(0, 0); classifier.classes()];
    for s in samples {
        let hit = classifier.predict(&s.image)? == s.label;
        per_class[s.label].0 += usize::from(hit);
        per_class[s.label].1 += 1;
    }
    Ok(EvalReport {
        correct: per_class.iter().map(|p| p.0).sum(),
        total: samples.len(),
        per_class,
    })
}

fn percent(c: usize, n: usize) -> String {
    format!("{:.2}", 100.0 * c as f64 / n as f64)
}

pub fn run(model: &Path, manifest_path: &Path, categories: Option<&Path>) -> Result<()> {
    let classifier = checkpoint::load(model)?;
    let manifest = DatasetManifest::read(manifest_path)?;
    let k = classifier.classes();
    if manifest.class_count() != k {
        return Err(UsageError(format!(
            "model has {k} classes but {} has {}",
            manifest_path.display(),
            manifest.class_count()
        ))
        .into());
    }
    let arch = classifier.network().architecture();
    let shape = Shape {
        width: arch.width,
        height: arch.height,
        channels: arch.channels,
    };
    let samples = manifest.load_samples(Some(shape))?;
    let report = evaluate(&classifier, &samples)?;
    let names = manifest.class_names();

    let mut out = std::io::stdout().lock();
    writeln!(out, "overall\t{}\t{}/{}", percent(report.correct, report.total), report.correct, report.total)?;
    for (class, &(c, n)) in report.per_class.iter().enumerate() {
        if n > 0 {
            writeln!(out, "class\t{class}\t{}\t{}\t{c}/{n}", names[class], percent(c, n))?;
        }
    }
    if let Some(path) = categories {
        let groups = read_categories(path, k)?;
        let mut totals: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
        for (class, group) in groups.iter().enumerate() {
            if let Some(group) = group {
                let entry = totals.entry(group).or_default();
                entry.0 += report.per_class[class].0;
                entry.1 += report.per_class[class].1;
            }
        }
        for (group, (c, n)) in totals {
            if n > 0 {
                writeln!(out, "category\t{group}\t{}\t{c}/{n}", percent(c, n))?;
            }
        }
    }
    Ok(())
}

/// Lines of `<class index> <category>`; `#` starts a comment.
fn read_categories(path: &Path, classes: usize) -> Result<Vec<Option<String>>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let mut groups = vec![None; classes];
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (index, name) = line
            .split_once(char::is_whitespace)
            .ok_or_else(|| UsageError(format!("{}:{}: expected '<class> <category>'", path.display(), n + 1)))?;
        let class: usize = index
            .parse()
            .ok()
            .filter(|&c| c < classes)
            .ok_or_else(|| UsageError(format!("{}:{}: bad class index '{index}'", path.display(), n + 1)))?;
        groups[class] = Some(name.trim().to_string());
    }
    Ok(groups)
}
