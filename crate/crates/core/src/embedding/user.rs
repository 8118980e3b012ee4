use std::collections::{BTreeMap, HashSet};

use super::vector::mean;
use super::{EmbedError, EmbeddingVector};
use crate::ingest::{ActionKind, RawEvent};

/// Mean of a user's post vectors, re-normalized to unit length.
pub fn user_embedding(post_vectors: &[EmbeddingVector]) -> Result<EmbeddingVector, EmbedError> {
    let dim = post_vectors.first().ok_or(EmbedError::NoVectors)?.dim();
    if let Some(v) = post_vectors.iter().find(|v| v.dim() != dim) {
        return Err(EmbedError::DimMismatch { expected: dim, got: v.dim() });
    }
    let m = mean(post_vectors).expect("non-empty");
    EmbeddingVector::normalized(m).map_err(|e| match e {
        EmbedError::ZeroNorm => EmbedError::DegenerateUser,
        other => other,
    })
}

/// Uris whose vectors describe each author: their own posts, replies and
/// quotes, plus posts they reposted when those are in the corpus.
pub fn user_post_uris(events: &[RawEvent]) -> BTreeMap<String, Vec<String>> {
    let texts: HashSet<&str> = events.iter().filter(|e| e.kind.authors_post()).map(|e| e.uri.as_str()).collect();
    let mut out: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for e in events {
        let uri = match e.kind {
            k if k.authors_post() => Some(e.uri.as_str()),
            ActionKind::Repost => e.subject_uri.as_deref().filter(|u| texts.contains(u)),
            _ => None,
        };
        if let Some(u) = uri {
            out.entry(e.did.clone()).or_default().push(u.to_string());
        }
    }
    out
}
