//! Survivor selection and offspring creation for the evolutionary mode.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::generator::GeneratorParams;
use crate::pareto::{crowding_distance, nondominated_sort, Orientation, SolutionRecord};

/// Indices of the `keep` best points: lower non-dominated rank first, then
/// larger crowding distance, then lower index.
pub fn survivor_indices<P: AsRef<[f64]>>(points: &[P], keep: usize) -> Vec<usize> {
    let fronts = nondominated_sort(points, Orientation::Maximize).expect("uniform objective lengths");
    let mut survivors = Vec::with_capacity(keep);
    for front in fronts {
        if survivors.len() >= keep {
            break;
        }
        let members: Vec<&[f64]> = front.iter().map(|&i| points[i].as_ref()).collect();
        let crowding = crowding_distance(&members);
        let mut ranked: Vec<(usize, f64)> = front.into_iter().zip(crowding).collect();
        // stable: equal crowding keeps ascending index order
        ranked.sort_by(|a, b| b.1.total_cmp(&a.1));
        survivors.extend(ranked.into_iter().map(|(i, _)| i).take(keep - survivors.len()));
    }
    survivors
}

/// Keeps the `keep` best records of `population` (see [`survivor_indices`]).
pub fn select_next_generation(population: &[SolutionRecord], keep: usize) -> Vec<SolutionRecord> {
    let points: Vec<&[f64]> = population.iter().map(|r| r.objectives.as_slice()).collect();
    survivor_indices(&points, keep)
        .into_iter()
        .map(|i| population[i].clone())
        .collect()
}

/// Uniform crossover (each coordinate from either parent with probability
/// 0.5) followed by per-coordinate Gaussian mutation, clamped to bounds.
pub fn make_offspring<R: Rng + ?Sized>(
    parents: &[SolutionRecord],
    template: &GeneratorParams,
    sigma: &[f64],
    rng: &mut R,
) -> GeneratorParams {
    let a = &parents[rng.random_range(0..parents.len())].theta;
    let b = &parents[rng.random_range(0..parents.len())].theta;
    let theta = a
        .iter()
        .zip(b)
        .zip(sigma)
        .zip(&template.bounds)
        .map(|(((&x, &y), &s), bounds)| {
            let gene = if rng.random::<bool>() { x } else { y };
            let z: f64 = StandardNormal.sample(rng);
            bounds.clamp(gene + s * z)
        })
        .collect();
    GeneratorParams {
        theta,
        bounds: template.bounds.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::ObjectiveVector;
    use crate::rng::stream_rng;

    fn record(i: usize, z: &[f64]) -> SolutionRecord {
        SolutionRecord {
            episode: 1,
            candidate: i,
            seed: i as u64,
            theta: vec![i as f64; 12],
            objectives: ObjectiveVector::new(z[..z.len() - 1].to_vec(), z[z.len() - 1]).unwrap(),
        }
    }

    #[test]
    fn total_tie_keeps_insertion_prefix() {
        let pop: Vec<SolutionRecord> = (0..8).map(|i| record(i, &[0.3, 0.5])).collect();
        let next = select_next_generation(&pop, 5);
        let ids: Vec<usize> = next.iter().map(|r| r.candidate).collect();
        assert_eq!(ids, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn rank_one_fills_first() {
        // 4 non-dominated points on a line and 4 dominated ones, interleaved
        let mut pop = Vec::new();
        for i in 0..4 {
            let t = i as f64 / 3.0;
            pop.push(record(2 * i, &[t, 1.0 - t]));
            pop.push(record(2 * i + 1, &[t * 0.5, (1.0 - t) * 0.5]));
        }
        let next = select_next_generation(&pop, 4);
        let mut ids: Vec<usize> = next.iter().map(|r| r.candidate).collect();
        ids.sort_unstable();
        assert_eq!(ids, vec![0, 2, 4, 6]);
    }

    #[test]
    fn matches_reference_sort_oracle() {
        use rand::Rng;
        let mut rng = stream_rng(12, 0);
        for _ in 0..20 {
            let points: Vec<Vec<f64>> = (0..30)
                .map(|_| (0..3).map(|_| rng.random_range(0..6) as f64).collect())
                .collect();
            // oracle: front index by repeated peeling, then sort by (front, -crowding, index)
            let dom = |a: &[f64], b: &[f64]| {
                a.iter().zip(b).all(|(x, y)| x >= y) && a.iter().zip(b).any(|(x, y)| x > y)
            };
            let mut front_of = vec![usize::MAX; points.len()];
            let mut level = 0;
            while front_of.contains(&usize::MAX) {
                let open: Vec<usize> = (0..points.len()).filter(|&i| front_of[i] == usize::MAX).collect();
                for &i in &open {
                    if !open.iter().any(|&j| dom(&points[j], &points[i])) {
                        front_of[i] = level;
                    }
                }
                level += 1;
            }
            let mut crowd = vec![0.0; points.len()];
            for l in 0..level {
                let members: Vec<usize> = (0..points.len()).filter(|&i| front_of[i] == l).collect();
                let pts: Vec<&[f64]> = members.iter().map(|&i| points[i].as_slice()).collect();
                for (&i, d) in members.iter().zip(crowding_distance(&pts)) {
                    crowd[i] = d;
                }
            }
            let mut order: Vec<usize> = (0..points.len()).collect();
            order.sort_by(|&a, &b| {
                front_of[a]
                    .cmp(&front_of[b])
                    .then(crowd[b].total_cmp(&crowd[a]))
                    .then(a.cmp(&b))
            });
            order.truncate(10);
            assert_eq!(survivor_indices(&points, 10), order);
        }
    }

    #[test]
    fn offspring_respect_bounds() {
        let template = GeneratorParams::identity();
        let parents: Vec<SolutionRecord> = (0..3)
            .map(|i| {
                let mut r = record(i, &[0.0, 0.0]);
                r.theta = template.bounds.iter().map(|b| b.upper * (i as f64 / 2.0)).collect();
                r
            })
            .collect();
        let mut rng = stream_rng(1, 0);
        for _ in 0..50 {
            let child = make_offspring(&parents, &template, &[10.0; 12], &mut rng);
            assert!(child.validate().is_ok());
        }
    }
}
