use std::collections::BTreeSet;

use super::MetricError;
use crate::analysis::{tokenize, TfidfModel};
use crate::embedding::{cosine, mean};

pub const DEFAULT_TOP_N: usize = 100;

/// Highest cosine similarity over all (generated, reference) pairs.
pub fn max_cosine<V: AsRef<[f64]>>(gen: &[V], reference: &[V]) -> Result<f64, MetricError> {
    if gen.is_empty() || reference.is_empty() {
        return Err(MetricError::EmptySet);
    }
    let mut best = f64::NEG_INFINITY;
    for g in gen {
        for r in reference {
            let c = cosine(g.as_ref(), r.as_ref()).ok_or(MetricError::ZeroVector)?;
            best = best.max(c);
        }
    }
    Ok(best)
}

/// Cosine similarity between the two sets' mean vectors.
pub fn avg_cosine<V: AsRef<[f64]>>(gen: &[V], reference: &[V]) -> Result<f64, MetricError> {
    let g = mean(gen).ok_or(MetricError::EmptySet)?;
    let r = mean(reference).ok_or(MetricError::EmptySet)?;
    cosine(&g, &r).ok_or(MetricError::ZeroMean)
}

/// Jaccard overlap of the two corpora's top-`n` TF-IDF terms, both scored
/// with one model fitted on the union (one document per text).
pub fn jaccard_top_tfidf<S: AsRef<str>>(gen: &[S], reference: &[S], n: usize) -> Result<f64, MetricError> {
    if gen.is_empty() || reference.is_empty() {
        return Err(MetricError::EmptySet);
    }
    let g: Vec<Vec<String>> = gen.iter().map(|t| tokenize(t.as_ref())).collect();
    let r: Vec<Vec<String>> = reference.iter().map(|t| tokenize(t.as_ref())).collect();
    let all: Vec<&[String]> = g.iter().chain(&r).map(Vec::as_slice).collect();
    let model = TfidfModel::fit(&all);
    if model.vocabulary().is_empty() {
        return Err(MetricError::EmptyVocabulary);
    }
    let a: BTreeSet<String> = model.top_terms(&g, n).into_iter().map(|(t, _)| t).collect();
    let b: BTreeSet<String> = model.top_terms(&r, n).into_iter().map(|(t, _)| t).collect();
    let union = a.union(&b).count();
    if union == 0 {
        return Ok(0.0);
    }
    Ok(a.intersection(&b).count() as f64 / union as f64)
}
