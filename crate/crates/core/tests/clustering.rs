use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use simpact_core::clustering::{assign_min_size, fit_constrained_kmeans, silhouette, ClusterError, FitParams};
use simpact_testkit::*;

fn uniform_points(rng: &mut ChaCha8Rng, n: usize, dim: usize) -> Vec<Vec<f64>> {
    (0..n).map(|_| (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect()
}

/// Unbalanced Gaussian blobs, so the size constraint binds.
fn blobs(rng: &mut ChaCha8Rng, n: usize, dim: usize, centers: usize) -> Vec<Vec<f64>> {
    let noise = Normal::new(0.0, 0.3).unwrap();
    let cs = uniform_points(rng, centers, dim)
        .into_iter()
        .map(|c| c.iter().map(|x| x * 5.0).collect::<Vec<_>>())
        .collect::<Vec<_>>();
    (0..n)
        .map(|_| {
            let c = &cs[if rng.gen_bool(0.7) { 0 } else { rng.gen_range(0..centers) }];
            c.iter().map(|x| x + noise.sample(rng)).collect()
        })
        .collect()
}

#[test]
fn assignment_matches_exhaustive_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for case in 0..200 {
        let k = rng.gen_range(1..=3);
        let min_size = rng.gen_range(0..=3);
        let n = rng.gen_range((k * min_size).max(k)..=12);
        let dim = rng.gen_range(2..=8);
        let points = uniform_points(&mut rng, n, dim);
        let centroids = uniform_points(&mut rng, k, dim);
        let a = assign_min_size(&points, &centroids, min_size).unwrap();
        let best = brute_force_min_cost(&points, &centroids, min_size);
        assert!((a.cost - best).abs() <= 1e-9, "case {case}: {} vs {best}", a.cost);
        assert!(a.sizes(k).iter().all(|&s| s >= min_size), "case {case}");
    }
}

#[test]
fn infeasible_assignment_is_an_error() {
    let pts = vec![vec![0.0, 0.0]; 5];
    let cs = vec![vec![0.0, 0.0], vec![1.0, 1.0]];
    assert!(matches!(assign_min_size(&pts, &cs, 3), Err(ClusterError::Infeasible { .. })));
}

#[test]
fn fits_respect_min_size_and_never_increase_inertia() {
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    for case in 0..50 {
        let k = rng.gen_range(2..=10);
        let n = rng.gen_range(k * 10..=500);
        let dim = rng.gen_range(2..=16);
        let points = blobs(&mut rng, n, dim, k);
        let mut params = FitParams::new(k, case);
        params.min_size = 10;
        let m = fit_constrained_kmeans(&points, params).unwrap();
        assert!(m.sizes().iter().all(|&s| s >= 10), "case {case}: {:?}", m.sizes());
        for w in m.inertia_history.windows(2) {
            assert!(w[1] <= w[0], "case {case}: {:?}", m.inertia_history);
        }
    }
}

#[test]
fn silhouette_equals_direct_computation() {
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    for case in 0..20 {
        let k = rng.gen_range(2..=6);
        let n = rng.gen_range(k * 2..=500);
        let points = blobs(&mut rng, n, 4, k);
        let mut labels: Vec<u32> = (0..n).map(|_| rng.gen_range(0..k as u32)).collect();
        labels[0] = 0;
        labels[1] = 1;
        let fast = silhouette(&points, &labels, n, 0).unwrap();
        let direct = direct_silhouette(&points, &labels);
        assert!((fast - direct).abs() <= 1e-9, "case {case}: {fast} vs {direct}");
    }
}
