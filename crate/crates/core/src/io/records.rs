//! JSON-lines archive and metrics logs, and the JSON trainer checkpoint.
//!
//! Floats are written in shortest round-trip form, so reading back a file
//! reproduces every value bit for bit.

use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::energy::ObjectiveVector;
use crate::error::{GolError, Result};
use crate::pareto::{Archive, SolutionRecord};
use crate::trainer::{CandidateMetrics, TrainerCheckpoint};

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct RecordLine {
    episode: usize,
    candidate: usize,
    seed: u64,
    theta: Vec<f64>,
    energies: Vec<f64>,
    accuracy: f64,
}

impl From<&SolutionRecord> for RecordLine {
    fn from(r: &SolutionRecord) -> Self {
        Self {
            episode: r.episode,
            candidate: r.candidate,
            seed: r.seed,
            theta: r.theta.clone(),
            energies: r.objectives.energies().to_vec(),
            accuracy: r.objectives.accuracy(),
        }
    }
}

impl RecordLine {
    fn into_record(self) -> Result<SolutionRecord> {
        Ok(SolutionRecord {
            episode: self.episode,
            candidate: self.candidate,
            seed: self.seed,
            theta: self.theta,
            objectives: ObjectiveVector::new(self.energies, self.accuracy)?,
        })
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct CheckpointFile {
    version: u32,
    config_hash: String,
    seed: u64,
    next_episode: usize,
    records: Vec<RecordLine>,
}

pub fn record_to_line(record: &SolutionRecord) -> String {
    serde_json::to_string(&RecordLine::from(record)).expect("record serializes")
}

pub fn record_from_line(line: &str, path: &Path, line_no: usize) -> Result<SolutionRecord> {
    serde_json::from_str::<RecordLine>(line)
        .map_err(|e| GolError::parse(path, line_no, e.to_string()))?
        .into_record()
        .map_err(|e| GolError::parse(path, line_no, e.to_string()))
}

fn write_lines<T>(path: &Path, items: &[T], line: impl Fn(&T) -> String) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| GolError::io(path, e))?;
    let mut out = BufWriter::new(file);
    for item in items {
        writeln!(out, "{}", line(item)).map_err(|e| GolError::io(path, e))?;
    }
    out.flush().map_err(|e| GolError::io(path, e))
}

fn read_lines<T>(path: &Path, parse: impl Fn(&str, usize) -> Result<T>) -> Result<Vec<T>> {
    let file = std::fs::File::open(path).map_err(|e| GolError::io(path, e))?;
    let mut items = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| GolError::io(path, e))?;
        if !line.trim().is_empty() {
            items.push(parse(&line, i + 1)?);
        }
    }
    Ok(items)
}

fn from_json<T: DeserializeOwned>(line: &str, path: &Path, line_no: usize) -> Result<T> {
    serde_json::from_str(line).map_err(|e| GolError::parse(path, line_no, e.to_string()))
}

/// One JSON object per record, in archive order.
pub fn write_archive(archive: &Archive, path: &Path) -> Result<()> {
    write_lines(path, archive.records(), record_to_line)
}

pub fn read_archive(path: &Path) -> Result<Archive> {
    Archive::from_records(read_lines(path, |l, n| record_from_line(l, path, n))?)
}

pub fn write_metrics(metrics: &[CandidateMetrics], path: &Path) -> Result<()> {
    write_lines(path, metrics, |m| serde_json::to_string(m).expect("metrics serialize"))
}

pub fn read_metrics(path: &Path) -> Result<Vec<CandidateMetrics>> {
    read_lines(path, |l, n| from_json(l, path, n))
}

/// Writes through a temporary file and renames, so an interrupted write
/// never leaves a truncated checkpoint behind.
pub fn save_checkpoint(checkpoint: &TrainerCheckpoint, path: &Path) -> Result<()> {
    let file = CheckpointFile {
        version: CHECKPOINT_VERSION,
        config_hash: checkpoint.config_hash.clone(),
        seed: checkpoint.seed,
        next_episode: checkpoint.next_episode,
        records: checkpoint.records.iter().map(RecordLine::from).collect(),
    };
    let text = serde_json::to_string_pretty(&file).expect("checkpoint serializes");
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, text).map_err(|e| GolError::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| GolError::io(path, e))
}

pub fn load_checkpoint(path: &Path) -> Result<TrainerCheckpoint> {
    let text = std::fs::read_to_string(path).map_err(|e| GolError::io(path, e))?;
    let file: CheckpointFile = from_json(&text, path, 0)?;
    if file.version != CHECKPOINT_VERSION {
        return Err(GolError::parse(path, 0, format!("unsupported checkpoint version {}", file.version)));
    }
    Ok(TrainerCheckpoint {
        config_hash: file.config_hash,
        seed: file.seed,
        next_episode: file.next_episode,
        records: file
            .records
            .into_iter()
            .map(RecordLine::into_record)
            .collect::<Result<_>>()?,
    })
}
