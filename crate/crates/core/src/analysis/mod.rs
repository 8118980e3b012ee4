//! Cluster interpretation: TF-IDF keywords, medoid posts and action
//! statistics tables.

mod medoid;
mod stats;
mod tfidf;
mod tokenize;

pub use medoid::medoid_posts;
pub use stats::{cluster_stats, ClusterStats, StatsRow};
pub use tfidf::{tfidf_top_terms, TfidfModel};
pub use tokenize::tokenize;
