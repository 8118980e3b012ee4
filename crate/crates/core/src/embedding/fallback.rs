use super::{EmbedError, EmbeddingProvider, EmbeddingVector};

pub const DEFAULT_DIM: usize = 256;
pub const MIN_DIM: usize = 8;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv1a(seed: u64, bytes: &[u8]) -> u64 {
    let mut h = FNV_OFFSET;
    for &b in seed.to_le_bytes().iter().chain(bytes) {
        h ^= b as u64;
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

/// Signed feature hashing of character 3-grams into `dim` buckets.
///
/// Each 3-gram is hashed with 64-bit FNV-1a, seeded by prefixing the seed's
/// little-endian bytes; the bucket is `h % dim` and the top bit picks the
/// sign. Texts shorter than three characters form a single gram.
pub fn fallback_embed(text: &str, dim: usize, seed: u64) -> Result<EmbeddingVector, EmbedError> {
    if dim < MIN_DIM {
        return Err(EmbedError::DimTooSmall(dim));
    }
    if text.is_empty() {
        return Err(EmbedError::EmptyText);
    }
    let mut v = vec![0.0f64; dim];
    let mut add = |gram: &str| {
        let h = fnv1a(seed, gram.as_bytes());
        let sign = if h >> 63 == 1 { -1.0 } else { 1.0 };
        v[(h % dim as u64) as usize] += sign;
    };
    let bounds: Vec<usize> = text.char_indices().map(|(i, _)| i).chain([text.len()]).collect();
    if bounds.len() <= 3 {
        add(text);
    } else {
        for w in bounds.windows(4) {
            add(&text[w[0]..w[3]]);
        }
    }
    EmbeddingVector::normalized(v)
}

/// Hermetic provider backed by [`fallback_embed`].
#[derive(Debug, Clone)]
pub struct FallbackProvider {
    pub dim: usize,
    pub seed: u64,
}

impl Default for FallbackProvider {
    fn default() -> Self {
        Self { dim: DEFAULT_DIM, seed: 0 }
    }
}

impl EmbeddingProvider for FallbackProvider {
    fn name(&self) -> &str {
        "fallback-3gram"
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn embed_batch(&mut self, texts: &[String]) -> Result<Vec<Vec<f64>>, EmbedError> {
        texts.iter().map(|t| fallback_embed(t, self.dim, self.seed).map(EmbeddingVector::into_inner)).collect()
    }
}
