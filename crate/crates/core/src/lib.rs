//! Privacy-preserving, persona-clustered social-media datasets and the
//! metrics used to score generated behavior against them.

pub mod analysis;
pub mod clustering;
pub mod embedding;
pub mod ingest;
pub mod metrics;
pub mod privacy;
pub mod threads;
