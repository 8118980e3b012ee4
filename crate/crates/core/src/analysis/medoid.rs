use tracing::warn;

use crate::embedding::cosine;

/// The `m` posts most cosine-similar to `centroid`, best first; equal
/// scores are ordered by uri.
pub fn medoid_posts<V: AsRef<[f64]>>(posts: &[(String, V)], centroid: &[f64], m: usize) -> Vec<(String, f64)> {
    if posts.len() < m {
        warn!(available = posts.len(), requested = m, "fewer posts than requested medoids");
    }
    let mut scored: Vec<(String, f64)> =
        posts.iter().map(|(uri, v)| (uri.clone(), cosine(v.as_ref(), centroid).unwrap_or(f64::NEG_INFINITY))).collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    scored.truncate(m);
    scored
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coincident_post_first() {
        let posts = vec![("a".to_string(), vec![1.0, 0.0]), ("b".to_string(), vec![-1.0, 0.0])];
        assert_eq!(medoid_posts(&posts, &[-1.0, 0.0], 1)[0].0, "b");
        assert_eq!(medoid_posts(&posts, &[1.0, 0.0], 5).len(), 2);
    }

    #[test]
    fn ties_by_uri() {
        let posts = vec![("z".to_string(), vec![1.0]), ("y".to_string(), vec![2.0])];
        let out = medoid_posts(&posts, &[1.0], 2);
        assert_eq!(out[0].0, "y");
    }
}
