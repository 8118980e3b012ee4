//! Scores for generated behavior against a cluster's observed threads.

mod divergence;
mod f1;
mod records;
mod report;
mod similarity;

pub use divergence::{js_divergence, js_from_histograms, JsEstimate, DEFAULT_BINS};
pub use f1::{action_f1, f1_score, F1Averaging};
pub use records::{parse_generation, read_generations, ActionSet, GenerationRecord, RecordError, Response};
pub use report::{
    aggregate, evaluate, evaluate_cluster, ground_truth, reference_texts, ClusterMetrics, Estimator, EvalConfig,
    MetricsReport, PopulationMetrics,
};
pub use similarity::{avg_cosine, jaccard_top_tfidf, max_cosine, DEFAULT_TOP_N};

use crate::clustering::ClusterError;
use crate::embedding::EmbedError;

#[derive(Debug, thiserror::Error)]
pub enum MetricError {
    #[error("histograms must be non-empty and of equal length")]
    HistogramShape,
    #[error("histograms need finite, non-negative mass")]
    HistogramMass,
    #[error("cannot compare an empty set")]
    EmptySet,
    #[error("at least 2 bins required, got {0}")]
    Bins(usize),
    #[error("zero vector has no direction")]
    ZeroVector,
    #[error("set mean is the zero vector")]
    ZeroMean,
    #[error("no tokens in either corpus")]
    EmptyVocabulary,
    #[error("generations reference unknown thread ids: {}", .0.join(", "))]
    UnmatchedIds(Vec<String>),
    #[error("generation names cluster {0}, which has no shard")]
    UnknownCluster(u32),
    #[error(transparent)]
    Cluster(#[from] ClusterError),
    #[error(transparent)]
    Embed(#[from] EmbedError),
    #[error(transparent)]
    Record(#[from] RecordError),
}
