//! Pipeline configuration: a TOML file, overridden by command-line flags.
//! The key path may also come from `SIMPACT_KEY_FILE`.

use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};
use simpact_core::clustering::{DEFAULT_MAX_ITER, DEFAULT_MIN_SIZE, DEFAULT_SAMPLE_CAP, DEFAULT_TOL};
use simpact_core::embedding::{DEFAULT_BATCH, DEFAULT_DIM};
use simpact_core::ingest::jetstream::ACTION_COLLECTIONS;
use simpact_core::metrics::{F1Averaging, DEFAULT_BINS, DEFAULT_TOP_N};

use crate::error::CliError;

pub const KEY_ENV: &str = "SIMPACT_KEY_FILE";
pub const DEFAULT_ENDPOINT: &str = "wss://jetstream2.us-east.bsky.network/subscribe";

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KeywordFiles {
    pub handles: PathBuf,
    pub party: PathBuf,
    pub general: PathBuf,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JetstreamFile {
    pub endpoint: Option<String>,
    pub collections: Option<Vec<String>>,
    pub cursor: Option<i64>,
    pub max_events: Option<usize>,
}

/// On-disk form; every field optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub inputs: Option<Vec<PathBuf>>,
    pub output_dir: Option<PathBuf>,
    pub lang: Option<String>,
    pub min_posts: Option<usize>,
    pub keyword_filter: Option<bool>,
    pub keywords: Option<KeywordFiles>,
    pub jetstream: Option<JetstreamFile>,
    pub embedding: Option<String>,
    pub dim: Option<usize>,
    pub batch_size: Option<usize>,
    pub k: Option<Vec<usize>>,
    pub min_size: Option<usize>,
    pub max_iter: Option<usize>,
    pub tol: Option<f64>,
    pub sample_cap: Option<usize>,
    pub seed: Option<u64>,
    pub key_file: Option<PathBuf>,
    pub bins: Option<usize>,
    pub top_n: Option<usize>,
    pub keywords_n: Option<usize>,
    pub medoids: Option<usize>,
    pub f1: Option<F1Averaging>,
    pub global_ranks: Option<bool>,
    pub dataset_k: Option<usize>,
}

/// Flags shared by every command; each one overrides the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// TOML config file
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory for all artifacts
    #[arg(long = "out", global = true)]
    pub output_dir: Option<PathBuf>,
    /// Input JSONL event files (repeatable)
    #[arg(long = "input", global = true)]
    pub inputs: Vec<PathBuf>,
    /// Language tag to keep; `any` disables the filter
    #[arg(long, global = true)]
    pub lang: Option<String>,
    #[arg(long, global = true)]
    pub min_posts: Option<usize>,
    /// Keep text events regardless of the keyword lists
    #[arg(long, global = true)]
    pub no_keyword_filter: bool,
    /// `fallback`, `tcp://host:port` or `exec:<command line>`
    #[arg(long, global = true)]
    pub embedding: Option<String>,
    #[arg(long, global = true)]
    pub dim: Option<usize>,
    #[arg(long, global = true)]
    pub batch_size: Option<usize>,
    /// Granularities, comma separated
    #[arg(long = "k", global = true, value_delimiter = ',')]
    pub k: Vec<usize>,
    #[arg(long, global = true)]
    pub min_size: Option<usize>,
    #[arg(long, global = true)]
    pub max_iter: Option<usize>,
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    #[arg(long, global = true)]
    pub sample_cap: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Secret key file (32 raw bytes or 64 hex chars)
    #[arg(long, global = true)]
    pub key_file: Option<PathBuf>,
    #[arg(long, global = true)]
    pub bins: Option<usize>,
    #[arg(long, global = true)]
    pub top_n: Option<usize>,
    #[arg(long, global = true)]
    pub f1: Option<F1Averaging>,
    /// Rank timestamps over the whole dataset instead of per cluster
    #[arg(long, global = true)]
    pub global_ranks: bool,
    /// Granularity used for threads, keywords and eval (default: best silhouette)
    #[arg(long, global = true)]
    pub dataset_k: Option<usize>,
    /// Re-run stages even when their outputs are current
    #[arg(long, global = true)]
    pub force: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum ProviderSpec {
    Fallback,
    Tcp(String),
    Exec(Vec<String>),
}

impl ProviderSpec {
    pub fn parse(s: &str) -> Result<Self, CliError> {
        let s = s.trim();
        if s == "fallback" {
            Ok(ProviderSpec::Fallback)
        } else if let Some(addr) = s.strip_prefix("tcp://") {
            Ok(ProviderSpec::Tcp(addr.to_string()))
        } else if let Some(cmd) = s.strip_prefix("exec:") {
            let argv: Vec<String> = cmd.split_whitespace().map(str::to_string).collect();
            if argv.is_empty() {
                return Err(CliError::Config("exec: provider needs a command".into()));
            }
            Ok(ProviderSpec::Exec(argv))
        } else {
            Err(CliError::Config(format!(
                "unknown embedding provider {s:?} (expected fallback, tcp://host:port or exec:<cmd>)"
            )))
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct JetstreamConfig {
    pub endpoint: String,
    pub collections: Vec<String>,
    pub cursor: Option<i64>,
    pub max_events: usize,
}

/// Fully resolved configuration with absolute paths.
#[derive(Debug, Clone, Serialize)]
pub struct PipelineConfig {
    pub inputs: Vec<PathBuf>,
    pub output_dir: PathBuf,
    pub lang: Option<String>,
    pub min_posts: usize,
    pub keyword_filter: bool,
    #[serde(skip)]
    pub keywords: Option<KeywordFiles>,
    pub jetstream: JetstreamConfig,
    pub embedding: ProviderSpec,
    pub dim: usize,
    pub batch_size: usize,
    pub ks: Vec<usize>,
    pub min_size: usize,
    pub max_iter: usize,
    pub tol: f64,
    pub sample_cap: usize,
    pub seed: u64,
    #[serde(skip)]
    pub key_file: Option<PathBuf>,
    pub bins: usize,
    pub top_n: usize,
    pub keywords_n: usize,
    pub medoids: usize,
    pub f1: F1Averaging,
    pub global_ranks: bool,
    pub dataset_k: Option<usize>,
    #[serde(skip)]
    pub force: bool,
}

fn absolute(base: &Path, p: PathBuf) -> PathBuf {
    if p.is_absolute() {
        p
    } else {
        base.join(p)
    }
}

impl PipelineConfig {
    /// Loads `overrides.config` (if any) and applies the flags on top.
    /// Relative paths in the file resolve against the file's directory,
    /// relative flag paths against the working directory.
    pub fn resolve(overrides: &Overrides, key_env: Option<PathBuf>) -> Result<Self, CliError> {
        let cwd = std::env::current_dir().map_err(|e| CliError::Config(format!("working directory: {e}")))?;
        let (file, base) = match &overrides.config {
            Some(path) => {
                let path = absolute(&cwd, path.clone());
                let text =
                    std::fs::read_to_string(&path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
                let file: FileConfig =
                    toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
                let base = path.parent().map(Path::to_path_buf).unwrap_or_else(|| cwd.clone());
                (file, base)
            }
            None => (FileConfig::default(), cwd.clone()),
        };
        let from_file = |p: PathBuf| absolute(&base, p);
        let from_flag = |p: &PathBuf| absolute(&cwd, p.clone());

        let inputs = if !overrides.inputs.is_empty() {
            overrides.inputs.iter().map(from_flag).collect()
        } else {
            file.inputs.unwrap_or_default().into_iter().map(from_file).collect()
        };
        let output_dir = match (&overrides.output_dir, file.output_dir) {
            (Some(p), _) => from_flag(p),
            (None, Some(p)) => from_file(p),
            (None, None) => cwd.join("out"),
        };
        let lang = overrides.lang.clone().or(file.lang).unwrap_or_else(|| "en".into());
        let lang = (lang != "any" && !lang.is_empty()).then_some(lang);
        let keywords = file.keywords.map(|k| KeywordFiles {
            handles: from_file(k.handles),
            party: from_file(k.party),
            general: from_file(k.general),
        });
        let js = file.jetstream.unwrap_or_default();
        let jetstream = JetstreamConfig {
            endpoint: js.endpoint.unwrap_or_else(|| DEFAULT_ENDPOINT.into()),
            collections: js.collections.unwrap_or_else(|| ACTION_COLLECTIONS.iter().map(|s| s.to_string()).collect()),
            cursor: js.cursor,
            max_events: js.max_events.unwrap_or(10_000),
        };
        let embedding =
            ProviderSpec::parse(overrides.embedding.as_deref().or(file.embedding.as_deref()).unwrap_or("fallback"))?;
        let ks = if !overrides.k.is_empty() {
            overrides.k.clone()
        } else {
            file.k.unwrap_or_else(|| vec![2, 25, 100, 1000])
        };
        let key_file = overrides
            .key_file
            .as_ref()
            .map(from_flag)
            .or_else(|| key_env.map(|p| absolute(&cwd, p)))
            .or(file.key_file.map(from_file));

        let cfg = PipelineConfig {
            inputs,
            output_dir,
            lang,
            min_posts: overrides.min_posts.or(file.min_posts).unwrap_or(2),
            keyword_filter: !overrides.no_keyword_filter && file.keyword_filter.unwrap_or(true),
            keywords,
            jetstream,
            embedding,
            dim: overrides.dim.or(file.dim).unwrap_or(DEFAULT_DIM),
            batch_size: overrides.batch_size.or(file.batch_size).unwrap_or(DEFAULT_BATCH),
            ks,
            min_size: overrides.min_size.or(file.min_size).unwrap_or(DEFAULT_MIN_SIZE),
            max_iter: overrides.max_iter.or(file.max_iter).unwrap_or(DEFAULT_MAX_ITER),
            tol: overrides.tol.or(file.tol).unwrap_or(DEFAULT_TOL),
            sample_cap: overrides.sample_cap.or(file.sample_cap).unwrap_or(DEFAULT_SAMPLE_CAP),
            seed: overrides.seed.or(file.seed).unwrap_or(0),
            key_file,
            bins: overrides.bins.or(file.bins).unwrap_or(DEFAULT_BINS),
            top_n: overrides.top_n.or(file.top_n).unwrap_or(DEFAULT_TOP_N),
            keywords_n: file.keywords_n.unwrap_or(5),
            medoids: file.medoids.unwrap_or(5),
            f1: overrides.f1.or(file.f1).unwrap_or_default(),
            global_ranks: overrides.global_ranks || file.global_ranks.unwrap_or(false),
            dataset_k: overrides.dataset_k.or(file.dataset_k),
            force: overrides.force,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), CliError> {
        let bad = |m: &str| Err(CliError::Config(m.into()));
        if self.ks.is_empty() || self.ks.contains(&0) {
            return bad("k values must be positive");
        }
        if self.dim < simpact_core::embedding::MIN_DIM {
            return bad("dim is below the minimum of 8");
        }
        if self.bins < 2 {
            return bad("bins must be at least 2");
        }
        if self.max_iter == 0 || self.tol.is_nan() || self.tol < 0.0 {
            return bad("max_iter must be positive and tol non-negative");
        }
        if self.batch_size == 0 || self.top_n == 0 {
            return bad("batch_size and top_n must be positive");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn provider_specs() {
        assert_eq!(ProviderSpec::parse("fallback").unwrap(), ProviderSpec::Fallback);
        assert_eq!(ProviderSpec::parse("tcp://127.0.0.1:9000").unwrap(), ProviderSpec::Tcp("127.0.0.1:9000".into()));
        assert_eq!(
            ProviderSpec::parse("exec:python3 bridge.py --stdio").unwrap(),
            ProviderSpec::Exec(vec!["python3".into(), "bridge.py".into(), "--stdio".into()])
        );
        assert!(ProviderSpec::parse("grpc://x").is_err());
        assert!(ProviderSpec::parse("exec:").is_err());
    }

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("simpact.toml");
        std::fs::write(&path, "seed = 3\nk = [2, 5]\nmin_size = 4\noutput_dir = \"o\"\nkey_file = \"key\"\n").unwrap();
        let ov = Overrides { config: Some(path), seed: Some(9), ..Overrides::default() };
        let cfg = PipelineConfig::resolve(&ov, None).unwrap();
        assert_eq!((cfg.seed, cfg.min_size), (9, 4));
        assert_eq!(cfg.ks, [2, 5]);
        assert_eq!(cfg.output_dir, dir.path().join("o"));
        assert_eq!(cfg.key_file, Some(dir.path().join("key")));

        let env = PipelineConfig::resolve(&ov, Some(PathBuf::from("/k/env"))).unwrap();
        assert_eq!(env.key_file, Some(PathBuf::from("/k/env")));
    }

    #[test]
    fn unknown_keys_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        std::fs::write(&path, "sed = 3\n").unwrap();
        let ov = Overrides { config: Some(path), ..Overrides::default() };
        assert!(matches!(PipelineConfig::resolve(&ov, None), Err(CliError::Config(_))));
    }
}
