//! K-means with k-means++ seeding.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;

use crate::error::{Error, Result};
use crate::neighborhoods::dist_sq;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KMeansConfig {
    pub max_iter: usize,
    /// Stop once no centroid moves farther than this.
    pub tol: f64,
    /// Independent seeded runs; the lowest-inertia one is kept.
    pub restarts: usize,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        KMeansConfig {
            max_iter: 300,
            tol: 1e-10,
            restarts: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    pub centroids: Vec<Vec<f64>>,
    /// 0-based centroid index per row.
    pub assignments: Vec<usize>,
    pub inertia: f64,
    /// Inertia after each assignment step of the kept run.
    pub inertia_history: Vec<f64>,
}

/// Index of the closest centroid, lowest index on ties.
pub fn closest_centroid(row: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (k, c) in centroids.iter().enumerate() {
        let d = dist_sq(row, c);
        if d < best.1 {
            best = (k, d);
        }
    }
    best
}

/// k-means++ seeding: the first centroid is a uniformly chosen row, each
/// further one is drawn with probability proportional to the squared
/// distance to the nearest centroid chosen so far.
pub fn plus_plus_seeds(rows: &[Vec<f64>], k: usize, rng: &mut impl Rng) -> Vec<usize> {
    let m = rows.len();
    let mut chosen = vec![rng.random_range(0..m)];
    let mut nearest: Vec<f64> = rows.iter().map(|r| dist_sq(r, &rows[chosen[0]])).collect();
    while chosen.len() < k {
        let next = match WeightedIndex::new(&nearest) {
            Ok(weights) => weights.sample(rng),
            // every row coincides with a chosen one
            Err(_) => {
                let free: Vec<usize> = (0..m).filter(|i| !chosen.contains(i)).collect();
                free[rng.random_range(0..free.len())]
            }
        };
        chosen.push(next);
        for (d, row) in nearest.iter_mut().zip(rows) {
            *d = d.min(dist_sq(row, &rows[next]));
        }
    }
    chosen
}

fn assign(rows: &[Vec<f64>], centroids: &[Vec<f64>], assignments: &mut [usize]) -> f64 {
    let mut inertia = 0.0;
    for (a, row) in assignments.iter_mut().zip(rows) {
        let (k, d) = closest_centroid(row, centroids);
        *a = k;
        inertia += d;
    }
    inertia
}

/// One seeded Lloyd run.
pub fn lloyd_from(rows: &[Vec<f64>], mut centroids: Vec<Vec<f64>>, config: &KMeansConfig) -> KMeansResult {
    let dim = rows[0].len();
    let k = centroids.len();
    let mut assignments = vec![0; rows.len()];
    let mut history = vec![assign(rows, &centroids, &mut assignments)];
    for _ in 0..config.max_iter {
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (row, &a) in rows.iter().zip(&assignments) {
            counts[a] += 1;
            for (s, x) in sums[a].iter_mut().zip(row) {
                *s += x;
            }
        }
        // empty clusters take the row farthest from its current centroid
        let mut taken = vec![false; rows.len()];
        for c in 0..k {
            if counts[c] > 0 {
                continue;
            }
            let far = (0..rows.len())
                .filter(|&i| !taken[i] && counts[assignments[i]] > 1)
                .max_by(|&i, &j| {
                    dist_sq(&rows[i], &centroids[assignments[i]])
                        .total_cmp(&dist_sq(&rows[j], &centroids[assignments[j]]))
                        .then(j.cmp(&i))
                });
            if let Some(i) = far {
                taken[i] = true;
                let old = assignments[i];
                counts[old] -= 1;
                for (s, x) in sums[old].iter_mut().zip(&rows[i]) {
                    *s -= x;
                }
                sums[c] = rows[i].clone();
                counts[c] = 1;
                assignments[i] = c;
            }
        }
        let mut shift: f64 = 0.0;
        for c in 0..k {
            if counts[c] == 0 {
                continue;
            }
            let updated: Vec<f64> = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            shift = shift.max(dist_sq(&updated, &centroids[c]).sqrt());
            centroids[c] = updated;
        }
        let inertia = assign(rows, &centroids, &mut assignments);
        history.push(inertia);
        if shift < config.tol {
            break;
        }
    }
    KMeansResult {
        centroids,
        assignments,
        inertia: *history.last().unwrap(),
        inertia_history: history,
    }
}

/// k-means++ seeded Lloyd iterations, best of `config.restarts` runs.
pub fn kmeans_pp(rows: &[Vec<f64>], k: usize, rng: &mut impl Rng, config: &KMeansConfig) -> Result<KMeansResult> {
    if k == 0 || rows.len() < k {
        return Err(Error::TooFewRows { rows: rows.len(), k });
    }
    let mut best: Option<KMeansResult> = None;
    for _ in 0..config.restarts.max(1) {
        let seeds = plus_plus_seeds(rows, k, rng);
        let centroids = seeds.iter().map(|&i| rows[i].clone()).collect();
        let run = lloyd_from(rows, centroids, config);
        if best.as_ref().is_none_or(|b| run.inertia < b.inertia) {
            best = Some(run);
        }
    }
    Ok(best.unwrap())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn k_equals_rows() {
        let rows = vec![vec![0.0, 1.0], vec![3.0, 2.0], vec![-1.0, 5.0]];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let res = kmeans_pp(&rows, 3, &mut rng, &KMeansConfig::default()).unwrap();
        assert_eq!(res.inertia, 0.0);
        let mut a = res.assignments.clone();
        a.sort();
        assert_eq!(a, vec![0, 1, 2]);
    }

    #[test]
    fn separated_blobs() {
        let rows = vec![vec![0.0, 0.0], vec![0.1, 0.0], vec![10.0, 10.0], vec![10.0, 10.1]];
        for seed in 0..20 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let res = kmeans_pp(&rows, 2, &mut rng, &KMeansConfig::default()).unwrap();
            assert_eq!(res.assignments[0], res.assignments[1]);
            assert_eq!(res.assignments[2], res.assignments[3]);
            assert_ne!(res.assignments[0], res.assignments[2]);
        }
    }

    #[test]
    fn too_few_rows() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            kmeans_pp(&[vec![1.0]], 2, &mut rng, &KMeansConfig::default()),
            Err(Error::TooFewRows { rows: 1, k: 2 })
        ));
    }

    #[test]
    fn duplicate_rows_still_seed() {
        let rows = vec![vec![1.0]; 4];
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let seeds = plus_plus_seeds(&rows, 3, &mut rng);
        let mut s = seeds.clone();
        s.sort();
        s.dedup();
        assert_eq!(s.len(), 3);
    }

    #[test]
    fn empty_cluster_is_reseeded() {
        // second centroid starts far from everything
        let rows = vec![vec![0.0], vec![1.0], vec![10.0], vec![11.0]];
        let res = lloyd_from(&rows, vec![vec![5.0], vec![100.0]], &KMeansConfig::default());
        let mut counts = [0; 2];
        for &a in &res.assignments {
            counts[a] += 1;
        }
        assert!(counts.iter().all(|&c| c > 0));
    }
}
