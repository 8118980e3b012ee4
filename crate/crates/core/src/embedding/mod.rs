//! Text and user embeddings, the hermetic fallback provider, the bridge
//! protocol client and the on-disk vector cache.

pub mod bridge;
mod cache;
mod fallback;
mod provider;
mod user;
mod vector;

pub use bridge::{BridgeClient, Handshake};
pub use cache::{CacheError, VectorCache};
pub use fallback::{fallback_embed, FallbackProvider, DEFAULT_DIM, MIN_DIM};
pub use provider::{embed_texts, EmbeddingProvider, DEFAULT_BATCH};
pub use user::{user_embedding, user_post_uris};
pub use vector::{cosine, dot, l2_norm, mean, squared_distance, EmbeddingVector};

#[derive(Debug, thiserror::Error)]
pub enum EmbedError {
    #[error("cannot embed empty text")]
    EmptyText,
    #[error("text {0} is empty")]
    EmptyTextAt(usize),
    #[error("embedding dim {0} is below the minimum of {MIN_DIM}")]
    DimTooSmall(usize),
    #[error("vector has no components")]
    EmptyVector,
    #[error("vector has non-finite components")]
    NonFinite,
    #[error("vector has zero norm")]
    ZeroNorm,
    #[error("no vectors to average")]
    NoVectors,
    #[error("user vectors cancel out; direction undefined")]
    DegenerateUser,
    #[error("provider returned dim {got}, declared {expected}")]
    DimMismatch { expected: usize, got: usize },
    #[error("provider returned {got} vectors for {expected} texts")]
    CountMismatch { expected: usize, got: usize },
    #[error("embedding transport: {0}")]
    Transport(#[source] std::io::Error),
    #[error("embedding protocol: {0}")]
    Protocol(String),
    #[error("provider error for request {id}: {message}")]
    Remote { id: u64, message: String },
}

impl EmbedError {
    /// Transport failures may succeed on retry; everything else is a
    /// contract or input error.
    pub fn is_retryable(&self) -> bool {
        matches!(self, EmbedError::Transport(_))
    }
}
