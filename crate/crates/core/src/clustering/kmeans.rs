use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use tracing::debug;

use super::flow::{assign_from_costs, distance_matrix};
use super::ClusterError;
use crate::embedding::squared_distance;

pub const DEFAULT_MIN_SIZE: usize = 10;
pub const DEFAULT_MAX_ITER: usize = 100;
pub const DEFAULT_TOL: f64 = 1e-4;

/// A fitted size-constrained K-means model. `labels[i]` is the cluster of
/// input point `i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterModel {
    pub k: usize,
    pub min_size: usize,
    pub seed: u64,
    pub iterations: usize,
    pub converged: bool,
    pub inertia: f64,
    /// inertia after the initial assignment and after every update
    pub inertia_history: Vec<f64>,
    pub centroids: Vec<Vec<f64>>,
    #[serde(skip)]
    pub labels: Vec<u32>,
}

impl ClusterModel {
    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &l in &self.labels {
            sizes[l as usize] += 1;
        }
        sizes
    }
}

pub(crate) fn check_points<P: AsRef<[f64]>>(points: &[P]) -> Result<usize, ClusterError> {
    let dim = points.first().ok_or(ClusterError::NoPoints)?.as_ref().len();
    for (i, p) in points.iter().enumerate() {
        let p = p.as_ref();
        if p.len() != dim {
            return Err(ClusterError::Dim { index: i, expected: dim, got: p.len() });
        }
        if p.iter().any(|x| !x.is_finite()) {
            return Err(ClusterError::NonFinite { index: i });
        }
    }
    Ok(dim)
}

/// k-means++ seeding: the first centroid uniformly, then each next one with
/// probability proportional to squared distance from the nearest chosen
/// centroid. When every remaining point coincides with a chosen one, the
/// next index is drawn uniformly from the unchosen points.
pub fn kmeanspp_init<P: AsRef<[f64]>>(points: &[P], k: usize, seed: u64) -> Result<Vec<Vec<f64>>, ClusterError> {
    let n = points.len();
    if k == 0 {
        return Err(ClusterError::NoClusters);
    }
    if k > n {
        return Err(ClusterError::TooManyClusters { k, points: n });
    }
    check_points(points)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen = vec![false; n];
    let mut picks = Vec::with_capacity(k);
    let first = rng.gen_range(0..n);
    chosen[first] = true;
    picks.push(first);
    let mut d2: Vec<f64> = points.iter().map(|p| squared_distance(p.as_ref(), points[first].as_ref())).collect();
    while picks.len() < k {
        let total: f64 = d2.iter().enumerate().filter(|&(i, _)| !chosen[i]).map(|(_, &v)| v).sum();
        let next = if total > 0.0 {
            let target = rng.gen::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = NONE;
            for (i, &w) in d2.iter().enumerate() {
                if chosen[i] || w == 0.0 {
                    continue;
                }
                acc += w;
                pick = i;
                if acc > target {
                    break;
                }
            }
            pick
        } else {
            let free: Vec<usize> = (0..n).filter(|&i| !chosen[i]).collect();
            free[rng.gen_range(0..free.len())]
        };
        chosen[next] = true;
        picks.push(next);
        for (i, p) in points.iter().enumerate() {
            let d = squared_distance(p.as_ref(), points[next].as_ref());
            if d < d2[i] {
                d2[i] = d;
            }
        }
    }
    Ok(picks.into_iter().map(|i| points[i].as_ref().to_vec()).collect())
}

const NONE: usize = usize::MAX;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitParams {
    pub k: usize,
    pub min_size: usize,
    pub max_iter: usize,
    pub tol: f64,
    pub seed: u64,
}

impl FitParams {
    pub fn new(k: usize, seed: u64) -> Self {
        Self { k, min_size: DEFAULT_MIN_SIZE, max_iter: DEFAULT_MAX_ITER, tol: DEFAULT_TOL, seed }
    }
}

fn means<P: AsRef<[f64]>>(points: &[P], labels: &[u32], k: usize, dim: usize) -> (Vec<Vec<f64>>, Vec<usize>) {
    let mut sums = vec![vec![0.0; dim]; k];
    let mut counts = vec![0usize; k];
    for (p, &l) in points.iter().zip(labels) {
        counts[l as usize] += 1;
        for (s, x) in sums[l as usize].iter_mut().zip(p.as_ref()) {
            *s += x;
        }
    }
    for (s, &c) in sums.iter_mut().zip(&counts) {
        if c > 0 {
            s.iter_mut().for_each(|x| *x /= c as f64);
        }
    }
    (sums, counts)
}

/// Lloyd iterations alternating the exact constrained assignment with
/// centroid means. Stops once the assignment no longer changes, the largest
/// centroid shift drops below `tol`, or after `max_iter` updates.
pub fn fit_constrained_kmeans<P: AsRef<[f64]> + Sync>(
    points: &[P],
    params: FitParams,
) -> Result<ClusterModel, ClusterError> {
    let FitParams { k, min_size, max_iter, tol, seed } = params;
    let n = points.len();
    let dim = check_points(points)?;
    if max_iter == 0 {
        return Err(ClusterError::MaxIter);
    }
    if k.saturating_mul(min_size) > n {
        return Err(ClusterError::Infeasible { k, min_size, points: n });
    }
    let mut centroids = kmeanspp_init(points, k, seed)?;
    let mut d = distance_matrix(points, &centroids);
    let mut assignment = assign_from_costs(&d, n, k, min_size);
    let mut history = vec![assignment.cost];
    let mut iterations = 0;
    let mut converged = false;

    while iterations < max_iter {
        let (mut next, counts) = means(points, &assignment.labels, k, dim);
        for c in (0..k).filter(|&c| counts[c] == 0) {
            // only reachable without a size floor
            let far = (0..n)
                .max_by(|&a, &b| {
                    let da = d[a * k + assignment.labels[a] as usize];
                    let db = d[b * k + assignment.labels[b] as usize];
                    da.total_cmp(&db).then(b.cmp(&a))
                })
                .expect("n > 0");
            next[c] = points[far].as_ref().to_vec();
        }
        let shift = centroids.iter().zip(&next).map(|(a, b)| squared_distance(a, b).sqrt()).fold(0.0, f64::max);
        centroids = next;
        iterations += 1;
        d = distance_matrix(points, &centroids);
        let updated = assign_from_costs(&d, n, k, min_size);
        let same = updated.labels == assignment.labels;
        assignment = updated;
        history.push(assignment.cost);
        debug!(iteration = iterations, inertia = assignment.cost, shift, "lloyd step");
        if same || shift < tol {
            converged = true;
            break;
        }
    }

    Ok(ClusterModel {
        k,
        min_size,
        seed,
        iterations,
        converged,
        inertia: assignment.cost,
        inertia_history: history,
        centroids,
        labels: assignment.labels,
    })
}
