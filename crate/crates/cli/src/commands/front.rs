use std::io::Write;
use std::path::Path;

use anyhow::Result;
use gol_core::io::{export_objective_csv, read_archive};
use gol_core::pareto::pareto_front;
use gol_core::Orientation;

use crate::UsageError;

/// Prints the front as tab-separated rows on stdout.
pub fn run(archive_path: &Path, csv: Option<&Path>) -> Result<()> {
    let archive = read_archive(archive_path)?;
    if archive.is_empty() {
        return Err(UsageError(format!("{} holds no records", archive_path.display())).into());
    }
    let front = pareto_front(archive.records(), Orientation::Maximize)?;
    let k = front[0].objectives.energies().len();
    let mut out = std::io::stdout().lock();
    let energies: Vec<String> = (1..=k).map(|i| format!("J_{i}")).collect();
    writeln!(out, "index\tepisode\tcandidate\tseed\t{}\taccuracy", energies.join("\t"))?;
    for (i, r) in front.iter().enumerate() {
        let values: Vec<String> = r.objectives.as_slice().iter().map(f64::to_string).collect();
        writeln!(out, "{i}\t{}\t{}\t{}\t{}", r.episode, r.candidate, r.seed, values.join("\t"))?;
    }
    if let Some(path) = csv {
        export_objective_csv(&archive, Orientation::Maximize, path)?;
    }
    eprintln!("{} of {} records on the front", front.len(), archive.len());
    Ok(())
}
