//! Size-constrained K-means, silhouette scoring and multi-K fits.

mod flow;
mod kmeans;
mod silhouette;
mod suite;

pub use flow::{assign_from_costs, assign_min_size, Assignment};
pub use kmeans::{
    fit_constrained_kmeans, kmeanspp_init, ClusterModel, FitParams, DEFAULT_MAX_ITER, DEFAULT_MIN_SIZE, DEFAULT_TOL,
};
pub use silhouette::{silhouette, DEFAULT_SAMPLE_CAP};
pub use suite::{fit_granularities, GranularityFit, GranularitySuite};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ClusterError {
    #[error("infeasible: k={k} clusters with min_size={min_size} need {} points, have {points}", k * min_size)]
    Infeasible { k: usize, min_size: usize, points: usize },
    #[error("k must be at least 1")]
    NoClusters,
    #[error("no points to cluster")]
    NoPoints,
    #[error("k={k} exceeds the number of points ({points})")]
    TooManyClusters { k: usize, points: usize },
    #[error("point {index} has dim {got}, expected {expected}")]
    Dim { index: usize, expected: usize, got: usize },
    #[error("point {index} has non-finite coordinates")]
    NonFinite { index: usize },
    #[error("max_iter must be at least 1")]
    MaxIter,
    #[error("silhouette needs at least two populated clusters")]
    SingleCluster,
    #[error("{labels} labels for {points} points")]
    LabelCount { labels: usize, points: usize },
}

/// `id,cluster` rows with a header line, in the given order.
pub fn assignment_csv(ids: &[String], labels: &[u32]) -> Result<String, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["id", "cluster"])?;
    for (id, l) in ids.iter().zip(labels) {
        w.write_record([id.as_str(), &l.to_string()])?;
    }
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("csv of UTF-8 input is UTF-8"))
}

pub fn parse_assignment_csv(text: &str) -> Result<Vec<(String, u32)>, csv::Error> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    r.deserialize::<(String, u32)>().collect()
}
