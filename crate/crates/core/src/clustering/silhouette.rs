use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::ClusterError;
use crate::embedding::squared_distance;

pub const DEFAULT_SAMPLE_CAP: usize = 10_000;

/// Mean silhouette over all points, or over `sample_cap` seeded samples
/// when there are more points than that. Distances are Euclidean; a point
/// alone in its cluster scores 0, as does a point with `a = b = 0`.
pub fn silhouette<P: AsRef<[f64]> + Sync>(
    points: &[P],
    labels: &[u32],
    sample_cap: usize,
    seed: u64,
) -> Result<f64, ClusterError> {
    let n = points.len();
    if labels.len() != n {
        return Err(ClusterError::LabelCount { labels: labels.len(), points: n });
    }
    super::kmeans::check_points(points)?;
    let k = labels.iter().map(|&l| l as usize + 1).max().unwrap_or(0);
    let mut sizes = vec![0usize; k];
    labels.iter().for_each(|&l| sizes[l as usize] += 1);
    let populated = sizes.iter().filter(|&&s| s > 0).count();
    if populated < 2 {
        return Err(ClusterError::SingleCluster);
    }
    let sampled: Vec<usize> = if n > sample_cap && sample_cap > 0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut idx = sample(&mut rng, n, sample_cap).into_vec();
        idx.sort_unstable();
        idx
    } else {
        (0..n).collect()
    };
    let scores: Vec<f64> = sampled
        .par_iter()
        .map(|&i| {
            let own = labels[i] as usize;
            if sizes[own] == 1 {
                return 0.0;
            }
            let mut sums = vec![0.0; k];
            for (j, p) in points.iter().enumerate() {
                if j != i {
                    sums[labels[j] as usize] += squared_distance(points[i].as_ref(), p.as_ref()).sqrt();
                }
            }
            let a = sums[own] / (sizes[own] - 1) as f64;
            let b = (0..k)
                .filter(|&c| c != own && sizes[c] > 0)
                .map(|c| sums[c] / sizes[c] as f64)
                .fold(f64::INFINITY, f64::min);
            let m = a.max(b);
            if m == 0.0 {
                0.0
            } else {
                (b - a) / m
            }
        })
        .collect();
    Ok(scores.iter().sum::<f64>() / scores.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tight_far_pairs() {
        let pts = vec![vec![0.0, 0.0], vec![0.0, 0.1], vec![10.0, 0.0], vec![10.0, 0.1]];
        let s = silhouette(&pts, &[0, 0, 1, 1], 100, 0).unwrap();
        // a = 0.1, b ~ 10.0002 for every point
        let b = (10.0f64 + (100.0f64 + 0.01).sqrt()) / 2.0;
        assert!((s - (b - 0.1) / b).abs() < 1e-12);
        assert!(s > 0.9);
    }

    #[test]
    fn identical_points_score_zero() {
        let pts = vec![vec![1.0]; 4];
        assert_eq!(silhouette(&pts, &[0, 0, 1, 1], 10, 0).unwrap(), 0.0);
    }

    #[test]
    fn single_cluster_errors() {
        let pts = vec![vec![1.0], vec![2.0]];
        assert!(matches!(silhouette(&pts, &[0, 0], 10, 0), Err(ClusterError::SingleCluster)));
    }

    #[test]
    fn sampling_is_seeded() {
        let pts: Vec<Vec<f64>> = (0..50).map(|i| vec![(i % 7) as f64, (i / 7) as f64]).collect();
        let labels: Vec<u32> = (0..50).map(|i| (i % 2) as u32).collect();
        let a = silhouette(&pts, &labels, 10, 3).unwrap();
        assert_eq!(a, silhouette(&pts, &labels, 10, 3).unwrap());
        assert_eq!(silhouette(&pts, &labels, 50, 1).unwrap(), silhouette(&pts, &labels, 50, 2).unwrap());
    }
}
