use super::{pareto_front_indices, Orientation};
use crate::energy::ObjectiveVector;
use crate::error::{GolError, Result};

/// One evaluated candidate: its parameters, objectives and where it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionRecord {
    pub episode: usize,
    /// Index of the candidate within its episode.
    pub candidate: usize,
    /// Generation seed; `generate(templates, theta, m, seed)` replays the candidate's data.
    pub seed: u64,
    pub theta: Vec<f64>,
    pub objectives: ObjectiveVector,
}

/// Append-only store of every evaluated candidate, in evaluation order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Archive {
    records: Vec<SolutionRecord>,
}

impl Archive {
    pub fn new() -> Self {
        Self::default()
    }

    /// Rebuilds an archive from previously stored records.
    pub fn from_records(records: Vec<SolutionRecord>) -> Result<Self> {
        let mut archive = Self::new();
        archive.append(records)?;
        Ok(archive)
    }

    /// Appends a batch atomically: either every record is added or none.
    pub fn append(&mut self, batch: Vec<SolutionRecord>) -> Result<()> {
        let width = self
            .records
            .first()
            .or(batch.first())
            .map_or(0, |r| r.objectives.len());
        if let Some(bad) = batch.iter().find(|r| r.objectives.len() != width) {
            return Err(GolError::DimensionMismatch {
                context: "archive objective vector length",
                expected: width,
                found: bad.objectives.len(),
            });
        }
        self.records.extend(batch);
        Ok(())
    }

    pub fn records(&self) -> &[SolutionRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Records from episodes `1..=episode`.
    pub fn through_episode(&self, episode: usize) -> &[SolutionRecord] {
        let end = self.records.partition_point(|r| r.episode <= episode);
        &self.records[..end]
    }

    pub fn last_episode(&self) -> usize {
        self.records.last().map_or(0, |r| r.episode)
    }

    pub fn objective_points(&self) -> Vec<&[f64]> {
        self.records.iter().map(|r| r.objectives.as_slice()).collect()
    }
}

/// Records dominated by no other record, in archive order. Records with equal
/// objective vectors are all kept.
pub fn pareto_front(records: &[SolutionRecord], orientation: Orientation) -> Result<Vec<SolutionRecord>> {
    if records.is_empty() {
        return Err(GolError::Empty("archive"));
    }
    let points: Vec<&[f64]> = records.iter().map(|r| r.objectives.as_slice()).collect();
    Ok(pareto_front_indices(&points, orientation)?
        .into_iter()
        .map(|i| records[i].clone())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(episode: usize, candidate: usize, z: &[f64]) -> SolutionRecord {
        SolutionRecord {
            episode,
            candidate,
            seed: 0,
            theta: vec![0.0; 12],
            objectives: ObjectiveVector::new(z[..z.len() - 1].to_vec(), z[z.len() - 1]).unwrap(),
        }
    }

    #[test]
    fn append_is_atomic() {
        let mut a = Archive::new();
        a.append(vec![record(1, 0, &[0.1, 0.5])]).unwrap();
        let bad = vec![record(2, 0, &[0.1, 0.5]), record(2, 1, &[0.1, 0.2, 0.5])];
        assert!(a.append(bad).is_err());
        assert_eq!(a.len(), 1);
    }

    #[test]
    fn front_keeps_archive_order_and_duplicates() {
        let a = Archive::from_records(vec![
            record(1, 0, &[0.2, 0.9]),
            record(1, 1, &[0.0, 0.1]),
            record(2, 0, &[0.9, 0.2]),
            record(2, 1, &[0.2, 0.9]),
        ])
        .unwrap();
        let front = pareto_front(a.records(), Orientation::Maximize).unwrap();
        let ids: Vec<(usize, usize)> = front.iter().map(|r| (r.episode, r.candidate)).collect();
        assert_eq!(ids, vec![(1, 0), (2, 0), (2, 1)]);
        assert_eq!(a.through_episode(1).len(), 2);
        assert!(pareto_front(&[], Orientation::Maximize).is_err());
    }
}
