use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use tracing::{debug, warn};

use super::divergence::{js_divergence, DEFAULT_BINS};
use super::f1::{action_f1, F1Averaging};
use super::records::{ActionSet, GenerationRecord};
use super::similarity::{avg_cosine, jaccard_top_tfidf, max_cosine, DEFAULT_TOP_N};
use super::MetricError;
use crate::embedding::{embed_texts, EmbeddingProvider, DEFAULT_BATCH};
use crate::threads::{ElementType, Thread};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub js_bins: usize,
    pub top_n: usize,
    pub averaging: F1Averaging,
    pub seed: u64,
    pub batch_size: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            js_bins: DEFAULT_BINS,
            top_n: DEFAULT_TOP_N,
            averaging: F1Averaging::Micro,
            seed: 0,
            batch_size: DEFAULT_BATCH,
        }
    }
}

/// Per-cluster scores; a metric is none when its inputs are missing
/// (no generated text, no reference text, no action predictions).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterMetrics {
    pub cluster: u32,
    pub generated: usize,
    pub reference: usize,
    pub js_divergence: Option<f64>,
    pub js_bins: Option<usize>,
    pub max_cosine: Option<f64>,
    pub avg_cosine: Option<f64>,
    pub jaccard: Option<f64>,
    pub action_f1: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PopulationMetrics {
    pub js_divergence: Option<f64>,
    pub max_cosine: Option<f64>,
    pub avg_cosine: Option<f64>,
    pub jaccard: Option<f64>,
    pub action_f1: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimator {
    pub embedding: String,
    pub dim: usize,
    pub js_bins: usize,
    pub top_n: usize,
    pub f1_averaging: F1Averaging,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub estimator: Estimator,
    pub clusters: Vec<ClusterMetrics>,
    pub population: PopulationMetrics,
}

fn mean_of(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let v: Vec<f64> = values.flatten().collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

/// Unweighted mean over the clusters where each metric is defined.
pub fn aggregate(clusters: &[ClusterMetrics]) -> PopulationMetrics {
    PopulationMetrics {
        js_divergence: mean_of(clusters.iter().map(|c| c.js_divergence)),
        max_cosine: mean_of(clusters.iter().map(|c| c.max_cosine)),
        avg_cosine: mean_of(clusters.iter().map(|c| c.avg_cosine)),
        jaccard: mean_of(clusters.iter().map(|c| c.jaccard)),
        action_f1: mean_of(clusters.iter().map(|c| c.action_f1)),
    }
}

/// Observed labels per thread id, from each thread's terminal action.
pub fn ground_truth(threads: &[Thread]) -> HashMap<String, ActionSet> {
    threads
        .iter()
        .filter_map(|t| {
            let term = t.terminal()?;
            (term.element_type == ElementType::Action)
                .then(|| (t.thread_id.clone(), ActionSet::from_terminal(term.kind)))
        })
        .collect()
}

/// Texts written by the cluster's members: the terminal element of every
/// thread that carries text.
pub fn reference_texts(threads: &[Thread]) -> Vec<String> {
    threads
        .iter()
        .filter_map(|t| t.terminal()?.text.as_deref())
        .filter(|s| !s.trim().is_empty())
        .map(str::to_string)
        .collect()
}

fn embedded<P: EmbeddingProvider + ?Sized>(
    provider: &mut P,
    texts: &[String],
    batch: usize,
) -> Result<Vec<Vec<f64>>, MetricError> {
    Ok(embed_texts(provider, texts, batch)?.into_iter().map(|v| v.into_inner()).collect())
}

pub fn evaluate_cluster<P: EmbeddingProvider + ?Sized>(
    cluster: u32,
    threads: &[Thread],
    generations: &[&GenerationRecord],
    provider: &mut P,
    cfg: &EvalConfig,
) -> Result<ClusterMetrics, MetricError> {
    let gen_texts: Vec<String> =
        generations.iter().map(|g| g.response.text()).filter(|s| !s.trim().is_empty()).map(str::to_string).collect();
    let ref_texts = reference_texts(threads);
    let mut m = ClusterMetrics {
        cluster,
        generated: gen_texts.len(),
        reference: ref_texts.len(),
        js_divergence: None,
        js_bins: None,
        max_cosine: None,
        avg_cosine: None,
        jaccard: None,
        action_f1: None,
    };
    if !gen_texts.is_empty() && !ref_texts.is_empty() {
        let g = embedded(provider, &gen_texts, cfg.batch_size)?;
        let r = embedded(provider, &ref_texts, cfg.batch_size)?;
        let js = js_divergence(&g, &r, cfg.js_bins, cfg.seed)?;
        m.js_divergence = Some(js.value);
        m.js_bins = Some(js.bins);
        m.max_cosine = Some(max_cosine(&g, &r)?);
        m.avg_cosine = Some(avg_cosine(&g, &r)?);
        m.jaccard = match jaccard_top_tfidf(&gen_texts, &ref_texts, cfg.top_n) {
            Ok(j) => Some(j),
            Err(MetricError::EmptyVocabulary) => None,
            Err(e) => return Err(e),
        };
    } else {
        warn!(cluster, generated = gen_texts.len(), reference = ref_texts.len(), "text metrics undefined");
    }
    let owned: Vec<GenerationRecord> = generations.iter().map(|g| (*g).clone()).collect();
    m.action_f1 = action_f1(&owned, &ground_truth(threads), cfg.averaging)?;
    debug!(cluster, ?m, "cluster evaluated");
    Ok(m)
}

/// Scores generations against the dataset shards, cluster by cluster.
/// Every generation must name a cluster present in `shards`.
pub fn evaluate<P: EmbeddingProvider + ?Sized>(
    shards: &BTreeMap<u32, Vec<Thread>>,
    generations: &[GenerationRecord],
    provider: &mut P,
    cfg: &EvalConfig,
) -> Result<MetricsReport, MetricError> {
    let mut by_cluster: BTreeMap<u32, Vec<&GenerationRecord>> = BTreeMap::new();
    for g in generations {
        if !shards.contains_key(&g.cluster) {
            return Err(MetricError::UnknownCluster(g.cluster));
        }
        by_cluster.entry(g.cluster).or_default().push(g);
    }
    let mut clusters = Vec::with_capacity(by_cluster.len());
    for (c, gens) in &by_cluster {
        clusters.push(evaluate_cluster(*c, &shards[c], gens, provider, cfg)?);
    }
    Ok(MetricsReport {
        estimator: Estimator {
            embedding: provider.name().to_string(),
            dim: provider.dim(),
            js_bins: cfg.js_bins,
            top_n: cfg.top_n,
            f1_averaging: cfg.averaging,
            seed: cfg.seed,
        },
        population: aggregate(&clusters),
        clusters,
    })
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.4}"))
}

impl MetricsReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Fixed-width table, one row per cluster plus the population mean.
    pub fn to_text_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:<10} {:>6} {:>6} {:>9} {:>9} {:>9} {:>9} {:>9}",
            "cluster", "gen", "ref", "JS ↓", "maxcos ↑", "avgcos ↑", "jacc ↑", "F1 ↑"
        );
        for c in &self.clusters {
            let _ = writeln!(
                s,
                "{:<10} {:>6} {:>6} {:>9} {:>9} {:>9} {:>9} {:>9}",
                c.cluster,
                c.generated,
                c.reference,
                cell(c.js_divergence),
                cell(c.max_cosine),
                cell(c.avg_cosine),
                cell(c.jaccard),
                cell(c.action_f1)
            );
        }
        let p = &self.population;
        let _ = writeln!(
            s,
            "{:<10} {:>6} {:>6} {:>9} {:>9} {:>9} {:>9} {:>9}",
            "mean",
            "",
            "",
            cell(p.js_divergence),
            cell(p.max_cosine),
            cell(p.avg_cosine),
            cell(p.jaccard),
            cell(p.action_f1)
        );
        let e = &self.estimator;
        let _ = writeln!(
            s,
            "embedding={} dim={} js_bins={} top_n={} f1={} seed={}",
            e.embedding,
            e.dim,
            e.js_bins,
            e.top_n,
            match e.f1_averaging {
                F1Averaging::Micro => "micro",
                F1Averaging::Macro => "macro",
            },
            e.seed
        );
        s
    }
}
