//! Multi-objective machinery over objective vectors: dominance, Pareto-front
//! extraction, non-dominated sorting, crowding distance, hypervolume and
//! linear scalarization.
//!
//! Functions take slices of anything that derefs to `[f64]`, so they work on
//! raw `Vec<f64>` points as well as [`ObjectiveVector`](crate::energy::ObjectiveVector)s.

mod archive;

use std::cmp::Ordering;

pub use archive::{pareto_front, Archive, SolutionRecord};

use crate::error::{GolError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Orientation {
    #[default]
    Maximize,
    Minimize,
}

impl Orientation {
    /// Maps a value so that larger is always better.
    #[inline]
    fn oriented(self, v: f64) -> f64 {
        match self {
            Orientation::Maximize => v,
            Orientation::Minimize => -v,
        }
    }
}

#[inline]
fn dominates_unchecked(a: &[f64], b: &[f64], orientation: Orientation) -> bool {
    let mut strictly = false;
    for (&x, &y) in a.iter().zip(b) {
        let (x, y) = (orientation.oriented(x), orientation.oriented(y));
        if x < y {
            return false;
        }
        if x > y {
            strictly = true;
        }
    }
    strictly
}

/// `a` dominates `b`: no worse in every objective, strictly better in at least one.
pub fn dominates(a: &[f64], b: &[f64], orientation: Orientation) -> Result<bool> {
    if a.len() != b.len() {
        return Err(GolError::DimensionMismatch {
            context: "objective vector length",
            expected: a.len(),
            found: b.len(),
        });
    }
    Ok(dominates_unchecked(a, b, orientation))
}

fn check_lengths<P: AsRef<[f64]>>(points: &[P]) -> Result<usize> {
    let dim = points.first().map_or(0, |p| p.as_ref().len());
    if let Some(p) = points.iter().find(|p| p.as_ref().len() != dim) {
        return Err(GolError::DimensionMismatch {
            context: "objective vector length",
            expected: dim,
            found: p.as_ref().len(),
        });
    }
    Ok(dim)
}

/// Indices (ascending) of the points dominated by no other point.
///
/// Points are visited in descending lexicographic order of their oriented
/// values; any dominator of a point precedes it, and by transitivity some
/// already-accepted front member dominates it too, so each point is only
/// compared against the current front.
pub fn pareto_front_indices<P: AsRef<[f64]>>(points: &[P], orientation: Orientation) -> Result<Vec<usize>> {
    check_lengths(points)?;
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&i, &j| {
        let (a, b) = (points[i].as_ref(), points[j].as_ref());
        a.iter()
            .zip(b)
            .map(|(x, y)| orientation.oriented(*y).total_cmp(&orientation.oriented(*x)))
            .find(|o| *o != Ordering::Equal)
            .unwrap_or(Ordering::Equal)
    });
    let mut front: Vec<usize> = Vec::new();
    for i in order {
        let p = points[i].as_ref();
        if !front.iter().any(|&f| dominates_unchecked(points[f].as_ref(), p, orientation)) {
            front.push(i);
        }
    }
    front.sort_unstable();
    Ok(front)
}

/// Fast non-dominated sorting: `fronts[0]` is the Pareto front, `fronts[k]`
/// the front of what remains after removing fronts `0..k`. Indices within a
/// front are ascending.
pub fn nondominated_sort<P: AsRef<[f64]>>(points: &[P], orientation: Orientation) -> Result<Vec<Vec<usize>>> {
    check_lengths(points)?;
    let n = points.len();
    let mut dominated: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut dominator_count = vec![0usize; n];
    for i in 0..n {
        for j in i + 1..n {
            let (a, b) = (points[i].as_ref(), points[j].as_ref());
            if dominates_unchecked(a, b, orientation) {
                dominated[i].push(j);
                dominator_count[j] += 1;
            } else if dominates_unchecked(b, a, orientation) {
                dominated[j].push(i);
                dominator_count[i] += 1;
            }
        }
    }
    let mut fronts = Vec::new();
    let mut current: Vec<usize> = (0..n).filter(|&i| dominator_count[i] == 0).collect();
    while !current.is_empty() {
        let mut next = Vec::new();
        for &p in &current {
            for &q in &dominated[p] {
                dominator_count[q] -= 1;
                if dominator_count[q] == 0 {
                    next.push(q);
                }
            }
        }
        next.sort_unstable();
        fronts.push(std::mem::replace(&mut current, next));
    }
    Ok(fronts)
}

/// Crowding distance of each point within one front.
///
/// For every objective, points holding the minimum or maximum value get
/// infinity; the others add the gap between the nearest strictly smaller and
/// strictly larger values, divided by the objective's range. An objective
/// with zero range contributes nothing. Fronts of at most two points are all
/// infinite. The result does not depend on input order.
pub fn crowding_distance<P: AsRef<[f64]>>(front: &[P]) -> Vec<f64> {
    let n = front.len();
    if n <= 2 {
        return vec![f64::INFINITY; n];
    }
    let dim = front[0].as_ref().len();
    let mut distance = vec![0.0; n];
    for m in 0..dim {
        let mut values: Vec<f64> = front.iter().map(|p| p.as_ref()[m]).collect();
        values.sort_by(f64::total_cmp);
        values.dedup();
        let (lo, hi) = (values[0], values[values.len() - 1]);
        let range = hi - lo;
        if range <= 0.0 {
            continue;
        }
        for (d, p) in distance.iter_mut().zip(front) {
            let v = p.as_ref()[m];
            if v == lo || v == hi {
                *d = f64::INFINITY;
            } else {
                let pos = values.partition_point(|&x| x < v);
                *d += (values[pos + 1] - values[pos - 1]) / range;
            }
        }
    }
    distance
}

/// Non-negative weights `lambda` for linear scalarization.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarizationWeights(Vec<f64>);

impl ScalarizationWeights {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(GolError::config("scalarization weights must be finite and >= 0"));
        }
        if weights.iter().all(|w| *w == 0.0) {
            return Err(GolError::config("scalarization weights must not all be zero"));
        }
        Ok(Self(weights))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

/// `sum_i lambda_i * z_i`.
pub fn scalarize(z: &[f64], weights: &ScalarizationWeights) -> Result<f64> {
    if z.len() != weights.0.len() {
        return Err(GolError::DimensionMismatch {
            context: "scalarization weights",
            expected: z.len(),
            found: weights.0.len(),
        });
    }
    Ok(z.iter().zip(&weights.0).map(|(a, b)| a * b).sum())
}

/// Volume of objective space dominated by `points` and bounded by `reference`.
///
/// Exact recursive slicing over the last objective; cost grows as
/// `O(n^(d-1))`, intended for a handful of objectives.
pub fn hypervolume<P: AsRef<[f64]>>(points: &[P], reference: &[f64], orientation: Orientation) -> Result<f64> {
    let dim = check_lengths(points)?;
    if !points.is_empty() && dim != reference.len() {
        return Err(GolError::DimensionMismatch {
            context: "hypervolume reference point",
            expected: dim,
            found: reference.len(),
        });
    }
    let reference: Vec<f64> = reference.iter().map(|&r| orientation.oriented(r)).collect();
    let oriented: Vec<Vec<f64>> = points
        .iter()
        .map(|p| p.as_ref().iter().map(|&v| orientation.oriented(v)).collect::<Vec<f64>>())
        .filter(|p| p.iter().zip(&reference).all(|(v, r)| v > r))
        .collect();
    Ok(slice_volume(oriented, &reference))
}

fn slice_volume(mut points: Vec<Vec<f64>>, reference: &[f64]) -> f64 {
    let d = reference.len();
    if points.is_empty() {
        return 0.0;
    }
    if d == 1 {
        return points.iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max) - reference[0];
    }
    points.sort_by(|a, b| b[d - 1].total_cmp(&a[d - 1]));
    let mut volume = 0.0;
    for i in 0..points.len() {
        let floor = points.get(i + 1).map_or(reference[d - 1], |p| p[d - 1]);
        let height = points[i][d - 1] - floor;
        if height > 0.0 {
            let active: Vec<Vec<f64>> = points[..=i].iter().map(|p| p[..d - 1].to_vec()).collect();
            volume += height * slice_volume(active, &reference[..d - 1]);
        }
    }
    volume
}
