//! The `simpact` command-line pipeline.

pub mod config;
pub mod error;
pub mod live;
pub mod stages;
pub mod synth;
pub mod workspace;

use std::ffi::OsString;
use std::io::{self, BufReader, IsTerminal, Write};
use std::net::TcpListener;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use simpact_core::embedding::{bridge, FallbackProvider};
use simpact_core::ingest::serialize_event;
use simpact_core::privacy::SecretKey;

use config::{Overrides, PipelineConfig, KEY_ENV};
use error::{CliError, IoContext};
use stages::Outcome;
use workspace::Workspace;

#[derive(Debug, Parser)]
#[command(
    name = "simpact",
    version,
    about = "Build privacy-preserving, persona-clustered datasets from social-media events"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Cmd,
    #[command(flatten)]
    pub overrides: Overrides,
    /// More log output (-v info, -vv debug)
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

#[derive(Debug, Subcommand)]
pub enum Cmd {
    /// Read, filter and prune raw events
    Ingest {
        /// Capture from the configured Jetstream endpoint as well
        #[arg(long)]
        live: bool,
    },
    /// Redact PII and anonymize mentions in event texts
    Anonymize,
    /// Embed posts and average them into user vectors
    Embed,
    /// Fit size-constrained K-means at every configured K
    Cluster,
    /// Assemble, rank and pseudonymize thread shards
    Threads,
    /// Action-by-cluster statistics tables
    Stats,
    /// TF-IDF keywords and medoid posts per cluster
    Keywords,
    /// Score generated responses against the dataset
    Eval {
        #[arg(long)]
        generations: PathBuf,
        /// Dataset directory (default: <out>/dataset)
        #[arg(long)]
        dataset: Option<PathBuf>,
    },
    /// Remove a user from the dataset and the stored events
    DeleteUser {
        #[arg(long)]
        did: String,
    },
    /// Write a new random 32-byte key (hex)
    Keygen {
        #[arg(long)]
        output: PathBuf,
    },
    /// ingest through keywords, plus eval when generations are given
    RunAll {
        #[arg(long)]
        live: bool,
        #[arg(long)]
        generations: Option<PathBuf>,
    },
    /// Write a seeded synthetic event corpus
    Synth {
        #[arg(long, default_value_t = 500)]
        events: usize,
        #[arg(long)]
        output: PathBuf,
    },
    /// Serve the fallback embedder over the bridge protocol
    #[command(hide = true)]
    ServeFallback {
        /// Listen on 127.0.0.1:<port> instead of stdio
        #[arg(long)]
        port: Option<u16>,
    },
}

fn report(stage: &str, outcome: Outcome) {
    match outcome {
        Outcome::Ran(msg) => println!("{stage}: {msg}"),
        Outcome::UpToDate => println!("{stage}: up to date"),
    }
}

fn keygen(path: &PathBuf, force: bool) -> Result<(), CliError> {
    if path.exists() && !force {
        return Err(CliError::Config(format!("{} exists; pass --force to overwrite", path.display())));
    }
    let key = SecretKey::generate();
    workspace::write_atomic(path, format!("{}\n", key.to_hex()).as_bytes())?;
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        std::fs::set_permissions(path, std::fs::Permissions::from_mode(0o600)).at(path)?;
    }
    println!("keygen: wrote {} (fingerprint {})", path.display(), key.fingerprint());
    Ok(())
}

fn serve_fallback(cfg: &PipelineConfig, port: Option<u16>) -> Result<(), CliError> {
    let mut provider = FallbackProvider { dim: cfg.dim, seed: cfg.seed };
    let io_err = |e: io::Error| CliError::Data(format!("bridge: {e}"));
    match port {
        None => {
            let stdin = io::stdin();
            bridge::serve(&mut provider, stdin.lock(), io::stdout().lock()).map_err(io_err)
        }
        Some(port) => {
            let listener = TcpListener::bind(("127.0.0.1", port)).map_err(io_err)?;
            for stream in listener.incoming() {
                let stream = stream.map_err(io_err)?;
                let reader = BufReader::new(stream.try_clone().map_err(io_err)?);
                if let Err(e) = bridge::serve(&mut provider, reader, stream) {
                    tracing::warn!(%e, "bridge connection ended");
                }
            }
            Ok(())
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    let key_env = std::env::var_os(KEY_ENV).map(PathBuf::from);
    let cfg = PipelineConfig::resolve(&cli.overrides, key_env)?;
    match cli.command {
        Cmd::Keygen { output } => return keygen(&output, cfg.force),
        Cmd::Synth { events, output } => {
            let corpus = synth::synthetic_corpus(events, cfg.seed);
            let mut buf = Vec::new();
            for e in &corpus {
                writeln!(buf, "{}", serialize_event(e)).expect("write to memory");
            }
            workspace::write_atomic(&output, &buf)?;
            println!("synth: wrote {} events to {}", corpus.len(), output.display());
            return Ok(());
        }
        Cmd::ServeFallback { port } => return serve_fallback(&cfg, port),
        _ => {}
    }
    let mut ws = Workspace::open(&cfg.output_dir)?;
    match cli.command {
        Cmd::Ingest { live } => report("ingest", stages::ingest(&cfg, &mut ws, live)?),
        Cmd::Anonymize => report("anonymize", stages::anonymize(&cfg, &mut ws)?),
        Cmd::Embed => report("embed", stages::embed(&cfg, &mut ws)?),
        Cmd::Cluster => report("cluster", stages::cluster(&cfg, &mut ws)?),
        Cmd::Threads => report("threads", stages::threads(&cfg, &mut ws)?),
        Cmd::Stats => report("stats", stages::stats(&cfg, &mut ws)?),
        Cmd::Keywords => report("keywords", stages::keywords(&cfg, &mut ws)?),
        Cmd::Eval { generations, dataset } => {
            report("eval", stages::eval(&cfg, &mut ws, &generations, dataset.as_deref())?)
        }
        Cmd::DeleteUser { did } => report("delete-user", stages::delete_user_stage(&cfg, &mut ws, &did)?),
        Cmd::RunAll { live, generations } => {
            report("ingest", stages::ingest(&cfg, &mut ws, live)?);
            report("anonymize", stages::anonymize(&cfg, &mut ws)?);
            report("embed", stages::embed(&cfg, &mut ws)?);
            report("cluster", stages::cluster(&cfg, &mut ws)?);
            report("threads", stages::threads(&cfg, &mut ws)?);
            report("stats", stages::stats(&cfg, &mut ws)?);
            report("keywords", stages::keywords(&cfg, &mut ws)?);
            if let Some(g) = generations {
                report("eval", stages::eval(&cfg, &mut ws, &g, None)?);
            }
        }
        Cmd::Keygen { .. } | Cmd::Synth { .. } | Cmd::ServeFallback { .. } => unreachable!(),
    }
    Ok(())
}

/// Runs one command in-process, `args[0]` being the program name. Logging
/// is left to the caller.
pub fn execute<I, T>(args: I) -> Result<(), CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| CliError::Config(e.to_string()))?;
    dispatch(cli)
}

/// Parses arguments, runs the command and maps errors to exit codes.
pub fn run() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let filter = tracing_subscriber::EnvFilter::try_from_default_env()
        .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new(level));
    tracing_subscriber::fmt()
        .with_env_filter(filter)
        .with_ansi(io::stderr().is_terminal())
        .with_writer(io::stderr)
        .init();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
