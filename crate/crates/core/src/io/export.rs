use std::path::Path;

use super::image_io::save_image;
use crate::dataset::{OneShotSet, SyntheticDataset};
use crate::error::{GolError, Result};
use crate::image::Image;
use crate::pareto::{pareto_front_indices, Archive, Orientation};

/// One montage row: a template followed by samples of its class.
#[derive(Debug, Clone)]
pub struct MontageRow {
    pub template: Image,
    pub samples: Vec<Image>,
}

/// Rows of `per_class` samples per class, taken in dataset order.
pub fn montage_rows(templates: &OneShotSet, dataset: &SyntheticDataset, per_class: usize) -> Vec<MontageRow> {
    (0..templates.class_count())
        .map(|k| MontageRow {
            template: templates.template(k).clone(),
            samples: dataset.class(k).take(per_class).cloned().collect(),
        })
        .collect()
}

/// Tiles the rows into one image: column 0 holds the templates, following
/// columns the samples. Cells take the first template's size; missing cells
/// stay black.
pub fn render_montage(rows: &[MontageRow]) -> Result<Image> {
    let first = rows.first().ok_or(GolError::Empty("montage rows"))?;
    let (cw, ch) = (first.template.width(), first.template.height());
    let channels = if rows.iter().any(|r| r.template.channels() == 3 || r.samples.iter().any(|s| s.channels() == 3)) {
        3
    } else {
        1
    };
    let cols = 1 + rows.iter().map(|r| r.samples.len()).max().unwrap_or(0);
    let mut canvas = Image::filled(cols * cw, rows.len() * ch, channels, 0.0)?;
    for (r, row) in rows.iter().enumerate() {
        for (c, cell) in std::iter::once(&row.template).chain(&row.samples).enumerate() {
            let cell = cell.with_channels(channels)?.resize(cw, ch)?;
            for y in 0..ch {
                for x in 0..cw {
                    for k in 0..channels {
                        let i = canvas.index(c * cw + x, r * ch + y, k);
                        canvas.pixels_mut()[i] = cell.get(x, y, k);
                    }
                }
            }
        }
    }
    Ok(canvas)
}

pub fn export_montage(rows: &[MontageRow], path: &Path) -> Result<()> {
    save_image(&render_montage(rows)?, path)
}

/// One parsed line of an objective CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveRow {
    pub episode: usize,
    pub candidate: usize,
    pub objectives: Vec<f64>,
    pub on_front: bool,
}

/// Writes `episode,candidate,J_1..J_K,accuracy,on_front`, one row per record.
pub fn export_objective_csv(archive: &Archive, orientation: Orientation, path: &Path) -> Result<()> {
    let first = archive.records().first().ok_or(GolError::Empty("archive"))?;
    let k = first.objectives.energies().len();
    let mut on_front = vec![false; archive.len()];
    for i in pareto_front_indices(&archive.objective_points(), orientation)? {
        on_front[i] = true;
    }
    let mut writer = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    let mut header = vec!["episode".to_string(), "candidate".to_string()];
    header.extend((1..=k).map(|i| format!("J_{i}")));
    header.extend(["accuracy".to_string(), "on_front".to_string()]);
    writer.write_record(&header).map_err(|e| csv_error(path, e))?;
    for (record, front) in archive.records().iter().zip(on_front) {
        let mut fields = vec![record.episode.to_string(), record.candidate.to_string()];
        fields.extend(record.objectives.as_slice().iter().map(|v| v.to_string()));
        fields.push(u8::from(front).to_string());
        writer.write_record(&fields).map_err(|e| csv_error(path, e))?;
    }
    writer.flush().map_err(|e| GolError::io(path, e))
}

pub fn read_objective_csv(path: &Path) -> Result<Vec<ObjectiveRow>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let width = reader.headers().map_err(|e| csv_error(path, e))?.len();
    if width < 4 {
        return Err(GolError::parse(path, 1, "objective CSV header is too short"));
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let bad = |what: &str| GolError::parse(path, line, format!("bad {what}"));
        rows.push(ObjectiveRow {
            episode: record[0].parse().map_err(|_| bad("episode"))?,
            candidate: record[1].parse().map_err(|_| bad("candidate"))?,
            objectives: (2..width - 1)
                .map(|i| record[i].parse::<f64>().map_err(|_| bad("objective")))
                .collect::<Result<_>>()?,
            on_front: match &record[width - 1] {
                "1" => true,
                "0" => false,
                _ => return Err(bad("on_front flag")),
            },
        });
    }
    Ok(rows)
}

fn csv_error(path: &Path, e: csv::Error) -> GolError {
    let line = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => GolError::io(path, io),
        other => GolError::parse(path, line, format!("{other:?}")),
    }
}
