//! Pipeline stages. Each reads its inputs from the output directory (or
//! the configured input files), writes its artifacts atomically and
//! records them in the manifest.

use std::collections::{BTreeMap, HashMap};
use std::fs::{self, File};
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::Command;

use serde::{Deserialize, Serialize};
use simpact_core::analysis::{cluster_stats, medoid_posts, tfidf_top_terms};
use simpact_core::clustering::{assignment_csv, fit_granularities, parse_assignment_csv, ClusterModel, FitParams};
use simpact_core::embedding::{
    embed_texts, user_embedding, user_post_uris, BridgeClient, EmbeddingProvider, FallbackProvider, VectorCache,
};
use simpact_core::ingest::{curate, read_events, serialize_event, CurationConfig, KeywordSet, RawEvent};
use simpact_core::metrics::{evaluate, read_generations, EvalConfig, MetricError};
use simpact_core::privacy::{delete_user, scrub, DeletionError, SecretKey};
use simpact_core::threads::{build_dataset, parse_thread, serialize_thread, RankScope, Thread};
use tracing::{info, warn};

use crate::config::{PipelineConfig, ProviderSpec, KEY_ENV};
use crate::error::{CliError, IoContext};
use crate::live;
use crate::workspace::{sha256_hex, Workspace};

pub const EVENTS: &str = "events.jsonl";
pub const ANONYMIZED: &str = "anonymized.jsonl";
pub const POST_VECTORS: &str = "vectors/posts.simpvec";
pub const USER_VECTORS: &str = "vectors/users.simpvec";
pub const CLUSTER_SUMMARY: &str = "clusters/summary.json";
pub const DATASET_DIR: &str = "dataset";
pub const DATASET_META: &str = "dataset/dataset.json";
pub const STATS_CSV: &str = "stats.csv";
pub const STATS_TXT: &str = "stats.txt";
pub const KEYWORDS: &str = "keywords.json";
pub const METRICS_JSON: &str = "metrics.json";
pub const METRICS_TXT: &str = "metrics.txt";

fn model_rel(k: usize) -> String {
    format!("clusters/k{k}/model.json")
}

fn assignment_rel(k: usize) -> String {
    format!("clusters/k{k}/assignment.csv")
}

fn shard_rel(cluster: u32) -> String {
    format!("{DATASET_DIR}/cluster_{cluster}.jsonl")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    Ran(String),
    UpToDate,
}

fn params<T: Serialize>(stage: &str, p: &T) -> String {
    sha256_hex(&serde_json::to_vec(&(stage, p)).expect("params serialize"))
}

fn require(
    ws: &Workspace,
    rel: &str,
    stage: &'static str,
    what: &'static str,
    producer: &'static str,
) -> Result<PathBuf, CliError> {
    let p = ws.path(rel);
    if p.exists() {
        Ok(p)
    } else {
        Err(CliError::Missing { stage, what, producer })
    }
}

fn load_events(path: &Path) -> Result<Vec<RawEvent>, CliError> {
    let f = File::open(path).at(path)?;
    let (events, skipped) =
        read_events(BufReader::new(f)).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    if !skipped.is_empty() {
        warn!(path = %path.display(), skipped = skipped.len(), first = %skipped[0].reason, "lines skipped");
    }
    Ok(events)
}

fn events_jsonl(events: &[RawEvent]) -> Vec<u8> {
    let mut out = String::new();
    for e in events {
        out.push_str(&serialize_event(e));
        out.push('\n');
    }
    out.into_bytes()
}

fn to_json<T: Serialize>(v: &T) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(v).expect("artifact serializes");
    s.push('\n');
    s.into_bytes()
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let bytes = fs::read(path).at(path)?;
    serde_json::from_slice(&bytes).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

pub fn load_key(cfg: &PipelineConfig) -> Result<SecretKey, CliError> {
    let path = cfg.key_file.as_ref().ok_or_else(|| {
        CliError::Config(format!("no key file; pass --key-file or set {KEY_ENV} (create one with `simpact keygen`)"))
    })?;
    SecretKey::load(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

pub fn make_provider(cfg: &PipelineConfig) -> Result<Box<dyn EmbeddingProvider>, CliError> {
    let bridge = |r: Result<BridgeClient, _>| -> Result<Box<dyn EmbeddingProvider>, CliError> {
        let c = r.map_err(|e| CliError::Data(format!("embedding bridge: {e}")))?;
        info!(name = %c.handshake().name, dim = c.handshake().dim, "embedding bridge ready");
        Ok(Box::new(c))
    };
    match &cfg.embedding {
        ProviderSpec::Fallback => Ok(Box::new(FallbackProvider { dim: cfg.dim, seed: cfg.seed })),
        ProviderSpec::Tcp(addr) => bridge(BridgeClient::connect(addr.as_str())),
        ProviderSpec::Exec(argv) => bridge(BridgeClient::spawn(Command::new(&argv[0]).args(&argv[1..]))),
    }
}

// ---- ingest -------------------------------------------------------------

#[derive(Serialize)]
struct IngestParams<'a> {
    lang: &'a Option<String>,
    min_posts: usize,
    keyword_filter: bool,
}

pub fn ingest(cfg: &PipelineConfig, ws: &mut Workspace, live_capture: bool) -> Result<Outcome, CliError> {
    let mut inputs = cfg.inputs.clone();
    if let Some(k) = &cfg.keywords {
        inputs.extend([k.handles.clone(), k.party.clone(), k.general.clone()]);
    }
    if !live_capture && cfg.inputs.is_empty() {
        return Err(CliError::Config("no input files; pass --input or set `inputs`".into()));
    }
    for p in &inputs {
        if !p.exists() {
            return Err(CliError::Config(format!("input {} does not exist", p.display())));
        }
    }
    let p = params(
        "ingest",
        &IngestParams { lang: &cfg.lang, min_posts: cfg.min_posts, keyword_filter: cfg.keyword_filter },
    );
    if !cfg.force && !live_capture && ws.is_fresh("ingest", &p, &inputs)? {
        return Ok(Outcome::UpToDate);
    }
    let mut events = Vec::new();
    if live_capture {
        events.extend(live::capture(&cfg.jetstream)?);
    }
    for path in &cfg.inputs {
        events.extend(load_events(path)?);
    }
    let read = events.len();
    events.sort_by(|a, b| a.order_key().cmp(&b.order_key()));
    let keywords = if cfg.keyword_filter {
        let set = match &cfg.keywords {
            Some(k) => KeywordSet::load(&k.handles, &k.party, &k.general)
                .map_err(|e| CliError::Config(format!("keyword lists: {e}")))?,
            None => KeywordSet::election_2025(),
        };
        Some(set.matcher())
    } else {
        None
    };
    let curated = curate(events, &CurationConfig { keywords, lang: cfg.lang.clone(), min_posts: cfg.min_posts });
    ws.write_atomic(EVENTS, &events_jsonl(&curated))?;
    let recorded_inputs = if live_capture { Vec::new() } else { inputs };
    ws.record("ingest", &p, cfg.seed, None, &recorded_inputs, vec![EVENTS.into()])?;
    Ok(Outcome::Ran(format!("kept {} of {read} events", curated.len())))
}

// ---- anonymize ----------------------------------------------------------

pub fn anonymize(cfg: &PipelineConfig, ws: &mut Workspace) -> Result<Outcome, CliError> {
    let input = require(ws, EVENTS, "anonymize", "curated events", "ingest")?;
    let p = params("anonymize", &());
    if !cfg.force && ws.is_fresh("anonymize", &p, std::slice::from_ref(&input))? {
        return Ok(Outcome::UpToDate);
    }
    let mut events = load_events(&input)?;
    let mut changed = 0;
    for e in &mut events {
        if let Some(t) = &e.text {
            let s = scrub(t);
            if &s != t {
                changed += 1;
            }
            e.text = Some(s);
        }
    }
    ws.write_atomic(ANONYMIZED, &events_jsonl(&events))?;
    ws.record("anonymize", &p, cfg.seed, None, &[input], vec![ANONYMIZED.into()])?;
    Ok(Outcome::Ran(format!("scrubbed {changed} of {} texts", events.iter().filter(|e| e.text.is_some()).count())))
}

// ---- embed --------------------------------------------------------------

#[derive(Serialize)]
struct EmbedParams<'a> {
    provider: &'a ProviderSpec,
    dim: usize,
    seed: u64,
}

pub fn embed(cfg: &PipelineConfig, ws: &mut Workspace) -> Result<Outcome, CliError> {
    let input = require(ws, ANONYMIZED, "embed", "anonymized events", "anonymize")?;
    let p = params("embed", &EmbedParams { provider: &cfg.embedding, dim: cfg.dim, seed: cfg.seed });
    if !cfg.force && ws.is_fresh("embed", &p, std::slice::from_ref(&input))? {
        return Ok(Outcome::UpToDate);
    }
    let events = load_events(&input)?;
    let mut keys = Vec::new();
    let mut texts = Vec::new();
    for e in events.iter().filter(|e| e.kind.authors_post()) {
        match e.text.as_deref().map(str::trim) {
            Some(t) if !t.is_empty() => {
                keys.push(e.uri.clone());
                texts.push(t.to_string());
            }
            _ => {}
        }
    }
    let mut provider = make_provider(cfg)?;
    let vectors = embed_texts(provider.as_mut(), &texts, cfg.batch_size).map_err(CliError::data)?;
    let dim = provider.dim();
    let mut posts = VectorCache::new(dim);
    for (k, v) in keys.into_iter().zip(vectors) {
        posts.insert(k, v).map_err(CliError::data)?;
    }
    let mut users = VectorCache::new(dim);
    let mut skipped = 0;
    for (did, uris) in user_post_uris(&events) {
        let vs: Vec<_> = uris.iter().filter_map(|u| posts.get(u).cloned()).collect();
        match user_embedding(&vs) {
            Ok(u) => users.insert(did, u).map_err(CliError::data)?,
            Err(e) => {
                skipped += 1;
                warn!(%e, "user has no usable embedding");
            }
        }
    }
    for (rel, cache) in [(POST_VECTORS, &posts), (USER_VECTORS, &users)] {
        let mut buf = Vec::new();
        cache.write_to(&mut buf).map_err(CliError::data)?;
        ws.write_atomic(rel, &buf)?;
    }
    ws.record("embed", &p, cfg.seed, None, &[input], vec![POST_VECTORS.into(), USER_VECTORS.into()])?;
    Ok(Outcome::Ran(format!(
        "{} posts, {} users embedded with {} (dim {dim}); {skipped} users skipped",
        posts.len(),
        users.len(),
        provider.name()
    )))
}

fn load_cache(path: &Path) -> Result<VectorCache, CliError> {
    let f = File::open(path).at(path)?;
    VectorCache::read_from(BufReader::new(f)).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

// ---- cluster ------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub k: usize,
    pub silhouette: Option<f64>,
    pub inertia: f64,
    pub iterations: usize,
    pub converged: bool,
    pub sizes: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedK {
    pub k: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSummary {
    pub users: usize,
    pub min_size: usize,
    pub seed: u64,
    pub fits: Vec<FitSummary>,
    pub skipped: Vec<SkippedK>,
    pub best_k: Option<usize>,
}

#[derive(Serialize)]
struct ClusterParams<'a> {
    ks: &'a [usize],
    min_size: usize,
    max_iter: usize,
    tol: f64,
    sample_cap: usize,
    seed: u64,
}

pub fn cluster(cfg: &PipelineConfig, ws: &mut Workspace) -> Result<Outcome, CliError> {
    let input = require(ws, USER_VECTORS, "cluster", "user embeddings", "embed")?;
    let p = params(
        "cluster",
        &ClusterParams {
            ks: &cfg.ks,
            min_size: cfg.min_size,
            max_iter: cfg.max_iter,
            tol: cfg.tol,
            sample_cap: cfg.sample_cap,
            seed: cfg.seed,
        },
    );
    if !cfg.force && ws.is_fresh("cluster", &p, std::slice::from_ref(&input))? {
        return Ok(Outcome::UpToDate);
    }
    let cache = load_cache(&input)?;
    let ids: Vec<String> = cache.vectors.keys().cloned().collect();
    let points: Vec<&[f64]> = cache.vectors.values().map(|v| v.as_slice()).collect();
    let base = FitParams { k: 1, min_size: cfg.min_size, max_iter: cfg.max_iter, tol: cfg.tol, seed: cfg.seed };
    let suite = fit_granularities(&points, &cfg.ks, base, cfg.sample_cap);
    if suite.fits.is_empty() {
        let reasons: Vec<String> = suite.skipped.iter().map(|(k, r)| format!("k={k}: {r}")).collect();
        let msg = format!("no granularity could be fitted ({})", reasons.join("; "));
        return Err(if suite.skipped.iter().any(|(_, r)| r.starts_with("infeasible")) {
            CliError::Infeasible(msg)
        } else {
            CliError::Data(msg)
        });
    }
    let mut outputs = Vec::new();
    for fit in &suite.fits {
        let k = fit.model.k;
        ws.write_atomic(&model_rel(k), &to_json(&fit.model))?;
        let csv = assignment_csv(&ids, &fit.model.labels).map_err(CliError::data)?;
        ws.write_atomic(&assignment_rel(k), csv.as_bytes())?;
        outputs.extend([model_rel(k), assignment_rel(k)]);
    }
    let summary = ClusterSummary {
        users: ids.len(),
        min_size: cfg.min_size,
        seed: cfg.seed,
        fits: suite
            .fits
            .iter()
            .map(|f| FitSummary {
                k: f.model.k,
                silhouette: f.silhouette,
                inertia: f.model.inertia,
                iterations: f.model.iterations,
                converged: f.model.converged,
                sizes: f.model.sizes(),
            })
            .collect(),
        skipped: suite.skipped.iter().map(|(k, r)| SkippedK { k: *k, reason: r.clone() }).collect(),
        best_k: suite.best_k(),
    };
    ws.write_atomic(CLUSTER_SUMMARY, &to_json(&summary))?;
    outputs.push(CLUSTER_SUMMARY.into());
    ws.record("cluster", &p, cfg.seed, None, &[input], outputs)?;
    let ks: Vec<String> = summary.fits.iter().map(|f| f.k.to_string()).collect();
    Ok(Outcome::Ran(format!(
        "{} users; fitted k={}; best k={}",
        ids.len(),
        ks.join(","),
        summary.best_k.map_or("-".into(), |k| k.to_string())
    )))
}

/// The granularity downstream stages use and its assignment file.
fn selected_k(cfg: &PipelineConfig, ws: &Workspace, stage: &'static str) -> Result<usize, CliError> {
    let path = require(ws, CLUSTER_SUMMARY, stage, "cluster assignment", "cluster")?;
    let summary: ClusterSummary = read_json(&path)?;
    let fitted: Vec<usize> = summary.fits.iter().map(|f| f.k).collect();
    let k = cfg
        .dataset_k
        .or(summary.best_k)
        .or_else(|| (fitted.len() == 1).then(|| fitted[0]))
        .ok_or_else(|| CliError::Config("cannot choose a granularity; pass --dataset-k".into()))?;
    if !fitted.contains(&k) {
        return Err(CliError::Config(format!("k={k} was not fitted (fitted: {fitted:?})")));
    }
    require(ws, &assignment_rel(k), stage, "cluster assignment", "cluster")?;
    Ok(k)
}

fn load_assignment(ws: &Workspace, k: usize) -> Result<HashMap<String, u32>, CliError> {
    let path = ws.path(&assignment_rel(k));
    let text = fs::read_to_string(&path).at(&path)?;
    let rows = parse_assignment_csv(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    Ok(rows.into_iter().collect())
}

// ---- threads ------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub tool: String,
    pub version: String,
    pub k: usize,
    pub key_fingerprint: String,
    pub seed: u64,
    pub rank_scope: String,
    pub threads: usize,
    pub clusters: BTreeMap<u32, usize>,
    pub truncated: usize,
    pub unresolved: usize,
    pub no_prior_post: usize,
    pub unclustered: usize,
    pub malformed: usize,
}

#[derive(Serialize)]
struct ThreadParams {
    k: usize,
    global_ranks: bool,
    key: String,
}

pub fn threads(cfg: &PipelineConfig, ws: &mut Workspace) -> Result<Outcome, CliError> {
    let k = selected_k(cfg, ws, "threads")?;
    let events_path = require(ws, ANONYMIZED, "threads", "anonymized events", "anonymize")?;
    let key = load_key(cfg)?;
    let fp = key.fingerprint();
    let inputs = [events_path.clone(), ws.path(&assignment_rel(k))];
    let p = params("threads", &ThreadParams { k, global_ranks: cfg.global_ranks, key: fp.clone() });
    if !cfg.force && ws.is_fresh("threads", &p, &inputs)? {
        return Ok(Outcome::UpToDate);
    }
    let events = load_events(&events_path)?;
    let assignment = load_assignment(ws, k)?;
    let scope = if cfg.global_ranks { RankScope::Global } else { RankScope::PerCluster };
    let dataset = build_dataset(&events, &assignment, &key, scope);
    let mut outputs = Vec::new();
    let mut clusters = BTreeMap::new();
    for (c, list) in &dataset.shards {
        ws.write_atomic(&shard_rel(*c), &shard_bytes(list))?;
        outputs.push(shard_rel(*c));
        clusters.insert(*c, list.len());
    }
    let s = &dataset.stats;
    let meta = DatasetMeta {
        tool: "simpact".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        k,
        key_fingerprint: fp.clone(),
        seed: cfg.seed,
        rank_scope: if cfg.global_ranks { "global" } else { "per-cluster" }.into(),
        threads: s.threads,
        clusters,
        truncated: s.truncated,
        unresolved: s.unresolved,
        no_prior_post: s.no_prior_post,
        unclustered: s.unclustered,
        malformed: s.malformed,
    };
    ws.write_atomic(DATASET_META, &to_json(&meta))?;
    outputs.push(DATASET_META.into());
    ws.record("threads", &p, cfg.seed, Some(fp), &inputs, outputs)?;
    Ok(Outcome::Ran(format!("{} threads in {} shards (k={k})", s.threads, dataset.shards.len())))
}

fn shard_bytes(threads: &[Thread]) -> Vec<u8> {
    let mut out = String::new();
    for t in threads {
        out.push_str(&serialize_thread(t));
        out.push('\n');
    }
    out.into_bytes()
}

/// Reads every shard listed in `dataset.json` under `dir`.
pub fn load_dataset(dir: &Path) -> Result<(DatasetMeta, BTreeMap<u32, Vec<Thread>>), CliError> {
    let meta_path = dir.join("dataset.json");
    if !meta_path.exists() {
        return Err(CliError::Missing { stage: "eval", what: "a thread dataset", producer: "threads" });
    }
    let meta: DatasetMeta = read_json(&meta_path)?;
    let mut shards = BTreeMap::new();
    for c in meta.clusters.keys() {
        let path = dir.join(format!("cluster_{c}.jsonl"));
        let text = fs::read_to_string(&path).at(&path)?;
        let mut list = Vec::new();
        for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            list.push(parse_thread(line).map_err(|e| CliError::Data(format!("{}:{}: {e}", path.display(), i + 1)))?);
        }
        shards.insert(*c, list);
    }
    Ok((meta, shards))
}

// ---- stats --------------------------------------------------------------

pub fn stats(cfg: &PipelineConfig, ws: &mut Workspace) -> Result<Outcome, CliError> {
    let k = selected_k(cfg, ws, "stats")?;
    let events_path = require(ws, ANONYMIZED, "stats", "anonymized events", "anonymize")?;
    let inputs = [events_path.clone(), ws.path(&assignment_rel(k))];
    let p = params("stats", &k);
    if !cfg.force && ws.is_fresh("stats", &p, &inputs)? {
        return Ok(Outcome::UpToDate);
    }
    let events = load_events(&events_path)?;
    let st = cluster_stats(&events, &load_assignment(ws, k)?);
    ws.write_atomic(STATS_CSV, st.to_csv().map_err(CliError::data)?.as_bytes())?;
    ws.write_atomic(STATS_TXT, st.to_text_table().as_bytes())?;
    ws.record("stats", &p, cfg.seed, None, &inputs, vec![STATS_CSV.into(), STATS_TXT.into()])?;
    Ok(Outcome::Ran(format!("{} clusters tabulated (k={k})", st.clusters.len())))
}

// ---- keywords -----------------------------------------------------------

#[derive(Debug, Serialize)]
struct TermScore {
    term: String,
    score: f64,
}

#[derive(Debug, Serialize)]
struct MedoidPost {
    similarity: f64,
    text: String,
}

#[derive(Debug, Serialize)]
struct ClusterKeywords {
    cluster: u32,
    posts: usize,
    keywords: Vec<TermScore>,
    medoids: Vec<MedoidPost>,
}

#[derive(Debug, Serialize)]
struct KeywordsReport {
    k: usize,
    clusters: Vec<ClusterKeywords>,
}

#[derive(Serialize)]
struct KeywordParams {
    k: usize,
    n: usize,
    medoids: usize,
}

pub fn keywords(cfg: &PipelineConfig, ws: &mut Workspace) -> Result<Outcome, CliError> {
    let k = selected_k(cfg, ws, "keywords")?;
    let events_path = require(ws, ANONYMIZED, "keywords", "anonymized events", "anonymize")?;
    let vec_path = require(ws, POST_VECTORS, "keywords", "post embeddings", "embed")?;
    let inputs = [events_path.clone(), vec_path.clone(), ws.path(&assignment_rel(k)), ws.path(&model_rel(k))];
    let p = params("keywords", &KeywordParams { k, n: cfg.keywords_n, medoids: cfg.medoids });
    if !cfg.force && ws.is_fresh("keywords", &p, &inputs)? {
        return Ok(Outcome::UpToDate);
    }
    let events = load_events(&events_path)?;
    let assignment = load_assignment(ws, k)?;
    let model: ClusterModel = read_json(&ws.path(&model_rel(k)))?;
    let posts = load_cache(&vec_path)?;
    let mut corpora: BTreeMap<u32, Vec<String>> = (0..k as u32).map(|c| (c, Vec::new())).collect();
    let mut members: BTreeMap<u32, Vec<(String, Vec<f64>)>> = BTreeMap::new();
    let mut text_of: HashMap<&str, &str> = HashMap::new();
    for e in events.iter().filter(|e| e.kind.authors_post()) {
        let (Some(&c), Some(text)) = (assignment.get(&e.did), e.text.as_deref()) else { continue };
        corpora.entry(c).or_default().push(text.to_string());
        text_of.insert(&e.uri, text);
        if let Some(v) = posts.get(&e.uri) {
            members.entry(c).or_default().push((e.uri.clone(), v.as_slice().to_vec()));
        }
    }
    let terms = tfidf_top_terms(&corpora, cfg.keywords_n);
    let clusters = corpora
        .iter()
        .map(|(&c, docs)| {
            let medoids = match (members.get(&c), model.centroids.get(c as usize)) {
                (Some(list), Some(centroid)) => medoid_posts(list, centroid, cfg.medoids)
                    .into_iter()
                    .map(|(uri, similarity)| MedoidPost { similarity, text: text_of[uri.as_str()].to_string() })
                    .collect(),
                _ => Vec::new(),
            };
            ClusterKeywords {
                cluster: c,
                posts: docs.len(),
                keywords: terms
                    .get(&c)
                    .map(|v| v.iter().map(|(t, s)| TermScore { term: t.clone(), score: *s }).collect())
                    .unwrap_or_default(),
                medoids,
            }
        })
        .collect();
    ws.write_atomic(KEYWORDS, &to_json(&KeywordsReport { k, clusters }))?;
    ws.record("keywords", &p, cfg.seed, None, &inputs, vec![KEYWORDS.into()])?;
    Ok(Outcome::Ran(format!("top {} terms for {k} clusters", cfg.keywords_n)))
}

// ---- eval ---------------------------------------------------------------

#[derive(Serialize)]
struct EvalParams<'a> {
    provider: &'a ProviderSpec,
    dim: usize,
    bins: usize,
    top_n: usize,
    f1: simpact_core::metrics::F1Averaging,
    seed: u64,
}

pub fn eval(
    cfg: &PipelineConfig,
    ws: &mut Workspace,
    generations: &Path,
    dataset: Option<&Path>,
) -> Result<Outcome, CliError> {
    let dir = dataset.map(Path::to_path_buf).unwrap_or_else(|| ws.path(DATASET_DIR));
    if !generations.exists() {
        return Err(CliError::Config(format!("generations file {} does not exist", generations.display())));
    }
    let (meta, shards) = load_dataset(&dir)?;
    let mut inputs = vec![generations.to_path_buf(), dir.join("dataset.json")];
    inputs.extend(meta.clusters.keys().map(|c| dir.join(format!("cluster_{c}.jsonl"))));
    let p = params(
        "eval",
        &EvalParams {
            provider: &cfg.embedding,
            dim: cfg.dim,
            bins: cfg.bins,
            top_n: cfg.top_n,
            f1: cfg.f1,
            seed: cfg.seed,
        },
    );
    if !cfg.force && ws.is_fresh("eval", &p, &inputs)? {
        return Ok(Outcome::UpToDate);
    }
    let f = File::open(generations).at(generations)?;
    let gens =
        read_generations(BufReader::new(f)).map_err(|e| CliError::Data(format!("{}: {e}", generations.display())))?;
    let mut provider = make_provider(cfg)?;
    let ecfg = EvalConfig {
        js_bins: cfg.bins,
        top_n: cfg.top_n,
        averaging: cfg.f1,
        seed: cfg.seed,
        batch_size: cfg.batch_size,
    };
    let report = evaluate(&shards, &gens, provider.as_mut(), &ecfg).map_err(|e| match e {
        MetricError::Embed(_) => CliError::Data(format!("embedding: {e}")),
        other => CliError::Data(other.to_string()),
    })?;
    ws.write_atomic(METRICS_JSON, format!("{}\n", report.to_json()).as_bytes())?;
    ws.write_atomic(METRICS_TXT, report.to_text_table().as_bytes())?;
    ws.record(
        "eval",
        &p,
        cfg.seed,
        Some(meta.key_fingerprint),
        &inputs,
        vec![METRICS_JSON.into(), METRICS_TXT.into()],
    )?;
    Ok(Outcome::Ran(format!("{} generations over {} clusters", gens.len(), report.clusters.len())))
}

// ---- delete-user --------------------------------------------------------

/// True when the event was written by `did` or points at it: a subject
/// user, a uri in its repository, or the DID spelled out in the text.
fn references(e: &RawEvent, did: &str) -> bool {
    let in_repo = |uri: &Option<String>| {
        uri.as_deref().and_then(|u| u.strip_prefix("at://")).is_some_and(|u| u.split('/').next() == Some(did))
    };
    e.did == did
        || e.subject_did.as_deref() == Some(did)
        || in_repo(&e.subject_uri)
        || in_repo(&e.parent_uri)
        || in_repo(&e.root_uri)
        || e.text.as_deref().is_some_and(|t| t.contains(did))
}

/// Removes `did` from the released dataset and purges every event that
/// names it from the operator's event files.
pub fn delete_user_stage(cfg: &PipelineConfig, ws: &mut Workspace, did: &str) -> Result<Outcome, CliError> {
    let dir = ws.path(DATASET_DIR);
    if !dir.join("dataset.json").exists() {
        return Err(CliError::Missing { stage: "delete-user", what: "a thread dataset", producer: "threads" });
    }
    let key = load_key(cfg)?;
    let (mut meta, mut shards) = load_dataset(&dir)?;
    let mut removed = 0;
    let mut touched = Vec::new();
    for (c, list) in shards.iter_mut() {
        let n = delete_user(&key, &meta.key_fingerprint, did, list).map_err(|e| match e {
            DeletionError::KeyMismatch { .. } => CliError::Config(e.to_string()),
            other => CliError::Data(other.to_string()),
        })?;
        if n > 0 {
            removed += n;
            ws.write_atomic(&shard_rel(*c), &shard_bytes(list))?;
            touched.push(shard_rel(*c));
        }
        meta.clusters.insert(*c, list.len());
    }
    meta.threads = meta.clusters.values().sum();
    ws.write_atomic(DATASET_META, &to_json(&meta))?;
    touched.push(DATASET_META.into());
    let mut purged = 0;
    for rel in [EVENTS, ANONYMIZED] {
        let path = ws.path(rel);
        if !path.exists() {
            continue;
        }
        let events = load_events(&path)?;
        let before = events.len();
        let kept: Vec<RawEvent> = events.into_iter().filter(|e| !references(e, did)).collect();
        if kept.len() != before {
            purged += before - kept.len();
            ws.write_atomic(rel, &events_jsonl(&kept))?;
            touched.push(rel.into());
        }
    }
    ws.refresh(&touched)?;
    Ok(Outcome::Ran(format!("removed {removed} thread elements and {purged} raw events")))
}
