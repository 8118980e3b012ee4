use tracing::warn;

use super::MetricError;
use crate::clustering::{assign_min_size, fit_constrained_kmeans, FitParams, DEFAULT_MAX_ITER, DEFAULT_TOL};

pub const DEFAULT_BINS: usize = 16;

fn kl_to_mixture(p: &[f64], m: &[f64]) -> f64 {
    p.iter().zip(m).filter(|&(&pi, _)| pi > 0.0).map(|(&pi, &mi)| pi * (pi / mi).log2()).sum()
}

/// Jensen-Shannon divergence (base 2) between two histograms, each
/// normalized to sum 1 first. Zero-mass bins contribute nothing.
pub fn js_from_histograms(p: &[f64], q: &[f64]) -> Result<f64, MetricError> {
    if p.len() != q.len() || p.is_empty() {
        return Err(MetricError::HistogramShape);
    }
    let (sp, sq): (f64, f64) = (p.iter().sum(), q.iter().sum());
    if !(sp > 0.0 && sq > 0.0) || p.iter().chain(q).any(|&x| x < 0.0 || !x.is_finite()) {
        return Err(MetricError::HistogramMass);
    }
    let p: Vec<f64> = p.iter().map(|x| x / sp).collect();
    let q: Vec<f64> = q.iter().map(|x| x / sq).collect();
    let m: Vec<f64> = p.iter().zip(&q).map(|(a, b)| 0.5 * (a + b)).collect();
    Ok(0.5 * kl_to_mixture(&p, &m) + 0.5 * kl_to_mixture(&q, &m))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JsEstimate {
    pub value: f64,
    pub bins: usize,
}

/// Embedding-set JS divergence: both sets are pooled, binned by a seeded
/// unconstrained k-means with `bins` centroids, and the two bin-occupancy
/// histograms compared. The pool is sorted before fitting so the estimate
/// does not depend on which set is passed first.
pub fn js_divergence<V: AsRef<[f64]> + Sync>(
    gen: &[V],
    reference: &[V],
    bins: usize,
    seed: u64,
) -> Result<JsEstimate, MetricError> {
    if gen.is_empty() || reference.is_empty() {
        return Err(MetricError::EmptySet);
    }
    if bins < 2 {
        return Err(MetricError::Bins(bins));
    }
    let mut pooled: Vec<&[f64]> = gen.iter().chain(reference).map(AsRef::as_ref).collect();
    pooled.sort_by(|a, b| {
        a.iter().zip(b.iter()).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or_else(|| a.len().cmp(&b.len()))
    });
    let bins = if pooled.len() < bins {
        warn!(requested = bins, pooled = pooled.len(), "fewer pooled points than bins; reducing");
        pooled.len()
    } else {
        bins
    };
    let model = fit_constrained_kmeans(
        &pooled,
        FitParams { k: bins, min_size: 0, max_iter: DEFAULT_MAX_ITER, tol: DEFAULT_TOL, seed },
    )?;
    let hist = |set: &[V]| -> Result<Vec<f64>, MetricError> {
        let labels = assign_min_size(set, &model.centroids, 0)?.labels;
        let mut h = vec![0.0; bins];
        labels.iter().for_each(|&l| h[l as usize] += 1.0);
        Ok(h)
    };
    let value = js_from_histograms(&hist(gen)?, &hist(reference)?)?;
    Ok(JsEstimate { value, bins })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_histograms() {
        // values from scipy.spatial.distance.jensenshannon(base=2) squared
        let v = js_from_histograms(&[0.5, 0.5], &[0.9, 0.1]).unwrap();
        assert!((v - 0.14679310243605215).abs() < 1e-12);
        let v = js_from_histograms(&[0.2, 0.3, 0.5], &[0.6, 0.4, 0.0]).unwrap();
        assert!((v - 0.3306589026043589).abs() < 1e-12);
        assert_eq!(js_from_histograms(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 1.0);
        assert_eq!(js_from_histograms(&[3.0, 1.0], &[6.0, 2.0]).unwrap(), 0.0);
    }

    #[test]
    fn identical_sets_are_zero() {
        let x: Vec<Vec<f64>> = (0..30).map(|i| vec![(i as f64).sin(), (i as f64).cos()]).collect();
        assert_eq!(js_divergence(&x, &x, 4, 1).unwrap().value, 0.0);
    }

    #[test]
    fn separated_blobs_are_one() {
        let a: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64 * 0.01, 0.0]).collect();
        let b: Vec<Vec<f64>> = (0..10).map(|i| vec![100.0 + i as f64 * 0.01, 0.0]).collect();
        assert_eq!(js_divergence(&a, &b, 2, 3).unwrap().value, 1.0);
    }

    #[test]
    fn symmetric() {
        let a: Vec<Vec<f64>> = (0..25).map(|i| vec![(i as f64 * 0.7).sin(), (i as f64 * 0.3).cos()]).collect();
        let b: Vec<Vec<f64>> = (0..17).map(|i| vec![(i as f64 * 1.1).cos(), (i as f64 * 0.5).sin()]).collect();
        let ab = js_divergence(&a, &b, 5, 9).unwrap().value;
        let ba = js_divergence(&b, &a, 5, 9).unwrap().value;
        assert!((ab - ba).abs() < 1e-12);
        assert!((0.0..=1.0).contains(&ab));
    }

    #[test]
    fn bins_reduced() {
        let a = vec![vec![0.0], vec![1.0]];
        let b = vec![vec![5.0]];
        assert_eq!(js_divergence(&a, &b, 16, 0).unwrap().bins, 3);
        assert!(matches!(js_divergence(&a, &b, 1, 0), Err(MetricError::Bins(1))));
    }
}
