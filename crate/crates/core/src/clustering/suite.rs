use rayon::prelude::*;
use tracing::warn;

use super::kmeans::{fit_constrained_kmeans, ClusterModel, FitParams};
use super::silhouette::silhouette;
use super::ClusterError;

#[derive(Debug, Clone, PartialEq)]
pub struct GranularityFit {
    pub model: ClusterModel,
    /// none for k = 1
    pub silhouette: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct GranularitySuite {
    pub fits: Vec<GranularityFit>,
    pub skipped: Vec<(usize, String)>,
}

impl GranularitySuite {
    /// K with the highest silhouette; ties go to the smaller K.
    pub fn best_k(&self) -> Option<usize> {
        self.fits
            .iter()
            .filter_map(|f| f.silhouette.map(|s| (f.model.k, s)))
            .fold(None, |best: Option<(usize, f64)>, (k, s)| match best {
                Some((bk, bs)) if bs > s || (bs == s && bk < k) => Some((bk, bs)),
                _ => Some((k, s)),
            })
            .map(|(k, _)| k)
    }

    pub fn get(&self, k: usize) -> Option<&GranularityFit> {
        self.fits.iter().find(|f| f.model.k == k)
    }
}

/// Fits one model per K on the same points and seed, in parallel. K values
/// that cannot be fitted are skipped with a warning.
pub fn fit_granularities<P: AsRef<[f64]> + Sync>(
    points: &[P],
    ks: &[usize],
    base: FitParams,
    sample_cap: usize,
) -> GranularitySuite {
    let mut ks: Vec<usize> = ks.to_vec();
    ks.sort_unstable();
    ks.dedup();
    let results: Vec<(usize, Result<GranularityFit, ClusterError>)> = ks
        .par_iter()
        .map(|&k| {
            let fit = fit_constrained_kmeans(points, FitParams { k, ..base }).and_then(|model| {
                let s = if k >= 2 { Some(silhouette(points, &model.labels, sample_cap, base.seed)?) } else { None };
                Ok(GranularityFit { model, silhouette: s })
            });
            (k, fit)
        })
        .collect();
    let mut suite = GranularitySuite::default();
    for (k, r) in results {
        match r {
            Ok(f) => suite.fits.push(f),
            Err(e) => {
                warn!(k, error = %e, "skipping granularity");
                suite.skipped.push((k, e.to_string()));
            }
        }
    }
    suite
}
