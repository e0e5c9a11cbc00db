use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{Dataset, LearnConfig};

const MAX_LLOYD_ITERATIONS: usize = 100;

/// One part of an instance partition produced by [`slice`].
#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    pub instances: Vec<usize>,
    /// Fraction of the sliced instances in this cluster.
    pub weight: f64,
}

struct Clustering {
    labels: Vec<usize>,
    inertia: f64,
}

/// Hard k-means clustering of the instances, restricted to `variables`.
///
/// Runs `cfg.kmeans_restarts` seeded k-means++ restarts and keeps the lowest
/// inertia (earliest restart on ties). Empty clusters are dropped, so fewer
/// than `cfg.num_clusters` parts may come back.
pub fn slice(
    data: &Dataset,
    instances: &[usize],
    variables: &[usize],
    cfg: &LearnConfig,
    rng: &mut impl Rng,
) -> Vec<Cluster> {
    let points: Vec<Vec<f64>> = instances
        .iter()
        .map(|&r| variables.iter().map(|&v| f64::from(data.get(r, v))).collect())
        .collect();
    let seeds: Vec<u64> = (0..cfg.kmeans_restarts.max(1)).map(|_| rng.random()).collect();
    let runs: Vec<Clustering> = seeds
        .par_iter()
        .map(|&seed| kmeans(&points, cfg.num_clusters, &mut ChaCha8Rng::seed_from_u64(seed)))
        .collect();
    let best = runs
        .into_iter()
        .reduce(|best, run| if run.inertia < best.inertia { run } else { best })
        .expect("at least one restart");

    let mut parts: Vec<Vec<usize>> = vec![Vec::new(); cfg.num_clusters];
    for (pos, &label) in best.labels.iter().enumerate() {
        parts[label].push(instances[pos]);
    }
    let total = instances.len() as f64;
    parts
        .into_iter()
        .filter(|p| !p.is_empty())
        .map(|p| Cluster {
            weight: p.len() as f64 / total,
            instances: p,
        })
        .collect()
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(point: &[f64], centers: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, center) in centers.iter().enumerate() {
        let dist = squared_distance(point, center);
        if dist < best.1 {
            best = (c, dist);
        }
    }
    best
}

fn kmeans(points: &[Vec<f64>], k: usize, rng: &mut impl Rng) -> Clustering {
    // k-means++ seeding; stops early when every point already sits on a center
    let mut centers = vec![points[rng.random_range(0..points.len())].clone()];
    while centers.len() < k {
        let dists: Vec<f64> = points.iter().map(|p| nearest(p, &centers).1).collect();
        let total: f64 = dists.iter().sum();
        if total <= 0.0 {
            break;
        }
        let mut target = rng.random::<f64>() * total;
        let mut chosen = dists.iter().rposition(|&d| d > 0.0).unwrap_or(0);
        for (i, &dist) in dists.iter().enumerate() {
            if dist > 0.0 && target < dist {
                chosen = i;
                break;
            }
            target -= dist;
        }
        centers.push(points[chosen].clone());
    }

    let dim = points[0].len();
    let mut labels = vec![usize::MAX; points.len()];
    for _ in 0..MAX_LLOYD_ITERATIONS {
        let mut changed = false;
        for (p, label) in points.iter().zip(labels.iter_mut()) {
            let (c, _) = nearest(p, &centers);
            if *label != c {
                *label = c;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        let mut sums = vec![vec![0.0; dim]; centers.len()];
        let mut counts = vec![0usize; centers.len()];
        for (p, &label) in points.iter().zip(&labels) {
            counts[label] += 1;
            sums[label].iter_mut().zip(p).for_each(|(s, x)| *s += x);
        }
        for (c, center) in centers.iter_mut().enumerate() {
            if counts[c] > 0 {
                for (x, s) in center.iter_mut().zip(&sums[c]) {
                    *x = s / counts[c] as f64;
                }
            }
        }
    }
    let inertia = points
        .iter()
        .zip(&labels)
        .map(|(p, &l)| squared_distance(p, &centers[l]))
        .sum();
    Clustering { labels, inertia }
}
