//! Exact minimum-size-constrained assignment.
//!
//! The transportation problem (points supply one unit each, cluster `c`
//! sends at most `min_size` units straight to the sink and the rest through
//! a shared slack node of capacity `n - k*min_size`) is solved by successive
//! shortest paths, adding one point at a time. Point nodes are contracted
//! away: a residual path `a -> point -> b` becomes a cluster-to-cluster arc
//! whose cost is the cheapest `d(i,b) - d(i,a)` over points `i` currently in
//! `a`, kept in one ordered set per cluster pair. Dijkstra runs on the
//! resulting dense graph of `k + 3` nodes with Johnson potentials.

use std::collections::BTreeSet;

use ordered_float::OrderedFloat;
use rayon::prelude::*;

use super::ClusterError;
use crate::embedding::squared_distance;

/// Point labels and total squared-distance cost.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    pub labels: Vec<u32>,
    pub cost: f64,
}

impl Assignment {
    pub fn sizes(&self, k: usize) -> Vec<usize> {
        let mut sizes = vec![0; k];
        for &l in &self.labels {
            sizes[l as usize] += 1;
        }
        sizes
    }
}

/// Row-major `n x k` squared distances.
pub(crate) fn distance_matrix<P: AsRef<[f64]> + Sync>(points: &[P], centroids: &[Vec<f64>]) -> Vec<f64> {
    points.par_iter().flat_map_iter(|p| centroids.iter().map(move |c| squared_distance(p.as_ref(), c))).collect()
}

/// Minimum-cost assignment of points to centroids with every cluster
/// receiving at least `min_size` points. `min_size == 0` is plain
/// nearest-centroid assignment with ties to the lowest cluster index.
pub fn assign_min_size<P: AsRef<[f64]> + Sync>(
    points: &[P],
    centroids: &[Vec<f64>],
    min_size: usize,
) -> Result<Assignment, ClusterError> {
    let (n, k) = (points.len(), centroids.len());
    if k == 0 {
        return Err(ClusterError::NoClusters);
    }
    if k.saturating_mul(min_size) > n {
        return Err(ClusterError::Infeasible { k, min_size, points: n });
    }
    let d = distance_matrix(points, centroids);
    Ok(assign_from_costs(&d, n, k, min_size))
}

/// Same as [`assign_min_size`] over a precomputed row-major cost matrix.
pub fn assign_from_costs(d: &[f64], n: usize, k: usize, min_size: usize) -> Assignment {
    assert_eq!(d.len(), n * k);
    let labels = if min_size == 0 { nearest(d, n, k) } else { FlowState::new(d, n, k, min_size).solve() };
    let cost = labels.iter().enumerate().map(|(i, &c)| d[i * k + c as usize]).sum();
    Assignment { labels, cost }
}

fn nearest(d: &[f64], n: usize, k: usize) -> Vec<u32> {
    (0..n)
        .map(|i| {
            let row = &d[i * k..(i + 1) * k];
            let mut best = 0;
            for (c, &v) in row.iter().enumerate().skip(1) {
                if v < row[best] {
                    best = c;
                }
            }
            best as u32
        })
        .collect()
}

const NONE: usize = usize::MAX;

struct FlowState<'a> {
    d: &'a [f64],
    n: usize,
    k: usize,
    min_size: usize,
    slack_cap: usize,
    label: Vec<usize>,
    /// units cluster c sends directly to the sink (at most min_size)
    direct: Vec<usize>,
    /// units cluster c sends through the slack node
    slack: Vec<usize>,
    slack_used: usize,
    /// pair[a*k+b]: (d(i,b) - d(i,a), i) for points i in a
    pair: Vec<BTreeSet<(OrderedFloat<f64>, usize)>>,
    /// potentials of clusters, the slack node and the sink
    pi: Vec<f64>,
}

impl<'a> FlowState<'a> {
    fn new(d: &'a [f64], n: usize, k: usize, min_size: usize) -> Self {
        Self {
            d,
            n,
            k,
            min_size,
            slack_cap: n - k * min_size,
            label: vec![NONE; n],
            direct: vec![0; k],
            slack: vec![0; k],
            slack_used: 0,
            pair: vec![BTreeSet::new(); k * k],
            pi: vec![0.0; k + 2],
        }
    }

    fn cost(&self, i: usize, c: usize) -> f64 {
        self.d[i * self.k + c]
    }

    fn place(&mut self, i: usize, c: usize) {
        let k = self.k;
        if self.label[i] != NONE {
            let a = self.label[i];
            for b in (0..k).filter(|&b| b != a) {
                let key = (OrderedFloat(self.cost(i, b) - self.cost(i, a)), i);
                self.pair[a * k + b].remove(&key);
            }
        }
        for b in (0..k).filter(|&b| b != c) {
            let key = (OrderedFloat(self.cost(i, b) - self.cost(i, c)), i);
            self.pair[c * k + b].insert(key);
        }
        self.label[i] = c;
    }

    fn solve(mut self) -> Vec<u32> {
        for p in 0..self.n {
            self.augment(p);
        }
        debug_assert!(self.direct.iter().all(|&m| m == self.min_size));
        self.label.into_iter().map(|c| c as u32).collect()
    }

    /// Routes point `p` along a shortest residual path to the sink.
    fn augment(&mut self, p: usize) {
        let k = self.k;
        let sigma = k;
        let sink = k + 1;
        let src = k + 2;
        let nodes = k + 3;
        let pi_src = (0..k).map(|c| self.pi[c] - self.cost(p, c)).fold(f64::NEG_INFINITY, f64::max);
        let pot = |v: usize, pi: &[f64]| if v == src { pi_src } else { pi[v] };

        let mut dist = vec![f64::INFINITY; nodes];
        let mut done = vec![false; nodes];
        let mut pred = vec![NONE; nodes];
        let mut via = vec![NONE; nodes];
        dist[src] = 0.0;

        loop {
            let mut u = NONE;
            for v in 0..nodes {
                if !done[v] && dist[v].is_finite() && (u == NONE || dist[v] < dist[u]) {
                    u = v;
                }
            }
            if u == NONE {
                break;
            }
            done[u] = true;
            if u == sink {
                break;
            }
            let du = dist[u];
            let pu = pot(u, &self.pi);
            let mut relax = |v: usize, w: f64, point: usize| {
                if done[v] {
                    return;
                }
                let reduced = (w + pu - pot(v, &self.pi)).max(0.0);
                let nd = du + reduced;
                if nd < dist[v] {
                    dist[v] = nd;
                    pred[v] = u;
                    via[v] = point;
                }
            };
            if u == src {
                for c in 0..k {
                    relax(c, self.cost(p, c), NONE);
                }
            } else if u == sigma {
                for c in 0..k {
                    if self.slack[c] > 0 {
                        relax(c, 0.0, NONE);
                    }
                }
                if self.slack_used < self.slack_cap {
                    relax(sink, 0.0, NONE);
                }
            } else {
                let a = u;
                for b in (0..k).filter(|&b| b != a) {
                    if let Some(&(w, i)) = self.pair[a * k + b].first() {
                        relax(b, w.0, i);
                    }
                }
                if self.direct[a] < self.min_size {
                    relax(sink, 0.0, NONE);
                }
                if self.slack_cap > 0 {
                    relax(sigma, 0.0, NONE);
                }
            }
        }

        let reach = dist[sink];
        assert!(reach.is_finite(), "feasible instance always has an augmenting path");
        for (p, d) in self.pi.iter_mut().zip(&dist) {
            *p += d.min(reach);
        }

        // apply the path from the sink back to the new point
        let mut moves: Vec<(usize, usize)> = Vec::new();
        let mut v = sink;
        while v != src {
            let u = pred[v];
            if u == src {
                moves.push((p, v));
            } else if u == sigma && v == sink {
                self.slack_used += 1;
            } else if u == sigma {
                self.slack[v] -= 1;
            } else if v == sink {
                self.direct[u] += 1;
            } else if v == sigma {
                self.slack[u] += 1;
            } else {
                moves.push((via[v], v));
            }
            v = u;
        }
        for (i, c) in moves {
            self.place(i, c);
        }
    }
}
