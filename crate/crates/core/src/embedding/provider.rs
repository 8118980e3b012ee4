use super::{EmbedError, EmbeddingVector};

pub const DEFAULT_BATCH: usize = 64;

/// A text-embedding backend. Implementations must be deterministic for a
/// fixed configuration and return one `dim`-length vector per text.
pub trait EmbeddingProvider {
    fn name(&self) -> &str;
    fn dim(&self) -> usize;
    fn embed_batch(&mut self, texts: &[String]) -> Result<Vec<Vec<f64>>, EmbedError>;

    /// Embeds several batches; transports that can pipeline requests
    /// override this.
    fn embed_batches(&mut self, batches: &[&[String]]) -> Result<Vec<Vec<Vec<f64>>>, EmbedError> {
        batches.iter().map(|b| self.embed_batch(b)).collect()
    }
}

/// Embeds `texts` in batches of `batch_size`, checks the provider contract
/// and returns unit-norm vectors in input order.
pub fn embed_texts<P: EmbeddingProvider + ?Sized>(
    provider: &mut P,
    texts: &[String],
    batch_size: usize,
) -> Result<Vec<EmbeddingVector>, EmbedError> {
    if let Some(i) = texts.iter().position(|t| t.is_empty()) {
        return Err(EmbedError::EmptyTextAt(i));
    }
    let dim = provider.dim();
    let batches: Vec<&[String]> = texts.chunks(batch_size.max(1)).collect();
    let results = provider.embed_batches(&batches)?;
    if results.len() != batches.len() {
        return Err(EmbedError::Protocol(format!("expected {} batch results, got {}", batches.len(), results.len())));
    }
    let mut out = Vec::with_capacity(texts.len());
    for (batch, vectors) in batches.iter().zip(results) {
        if vectors.len() != batch.len() {
            return Err(EmbedError::CountMismatch { expected: batch.len(), got: vectors.len() });
        }
        for v in vectors {
            if v.len() != dim {
                return Err(EmbedError::DimMismatch { expected: dim, got: v.len() });
            }
            out.push(EmbeddingVector::normalized(v)?);
        }
    }
    Ok(out)
}
