use std::io::IsTerminal;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use credsearch::api::{self, ApiOptions};
use credsearch::bench::{self, BenchConfig};
use credsearch::simserver::{self, SimServer, DEFAULT_MAX_BATCH};
use credsearch::source::parse_ndjson;
use credsearch::state::ServiceState;
use credsearch::sync::{SyncConfig, Syncer, DEFAULT_BATCH_SIZE};
use credsearch_core::ingest::{IngestError, LocalLedger};
use credsearch_core::sim::{generate, GeneratorConfig, SimLedger};
use tokio::net::TcpListener;
use tracing_subscriber::EnvFilter;

const LEDGER_URL_ENV: &str = "CREDSEARCH_LEDGER_URL";
const DATA_DIR_ENV: &str = "CREDSEARCH_DATA_DIR";

#[derive(Debug, Parser)]
#[command(
    name = "credsearch",
    version,
    about = "Full-text search over a verified copy of an Indy-style ledger"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Serve a synthetic (or recorded) ledger over HTTP.
    Sim(SimArgs),
    /// Keep a verified local ledger copy in sync with a source.
    Sync(SyncArgs),
    /// Run the sync loop and the search API in one process.
    Serve(ServeArgs),
    /// Replay the five query classes against a running service.
    Bench(BenchArgs),
}

/// Describes a generated corpus; shared by `sim` and `bench`.
#[derive(Debug, Clone, Args)]
struct CorpusArgs {
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 20)]
    orgs: usize,
    #[arg(long, default_value_t = 30)]
    schemas: usize,
    #[arg(long, default_value_t = 2)]
    claim_defs_per_schema: usize,
    /// Emit exactly this many transactions using the type mix instead of the
    /// org/schema counts.
    #[arg(long)]
    count: Option<usize>,
}

impl CorpusArgs {
    fn config(&self) -> GeneratorConfig {
        GeneratorConfig {
            seed: self.seed,
            n_orgs: self.orgs,
            n_schemas: self.schemas,
            claim_defs_per_schema: self.claim_defs_per_schema,
            count: self.count,
            ..GeneratorConfig::default()
        }
    }
}

#[derive(Debug, Args)]
struct SimArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    #[arg(long, default_value_t = 9701)]
    port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    bind: String,
    /// Accept appends via POST /txns.
    #[arg(long)]
    mutable: bool,
    /// Largest range returned by one GET /txns.
    #[arg(long, default_value_t = DEFAULT_MAX_BATCH)]
    max_batch: u64,
    /// Serve the transactions of a newline-delimited file instead of
    /// generating a corpus.
    #[arg(long)]
    ledger_file: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
struct SourceArgs {
    /// Ledger source URL (overridden by CREDSEARCH_LEDGER_URL).
    #[arg(long)]
    ledger_url: Option<String>,
    /// Directory of the local ledger copy (overridden by CREDSEARCH_DATA_DIR).
    #[arg(long)]
    data_dir: Option<PathBuf>,
    /// Seconds between polls once the copy is current.
    #[arg(long, default_value_t = 10.0)]
    poll_interval: f64,
    /// Transactions requested per range read.
    #[arg(long, default_value_t = DEFAULT_BATCH_SIZE)]
    batch_size: u64,
}

impl SourceArgs {
    /// Resolves flags and environment; the environment wins.
    fn resolve(&self) -> Result<(SyncConfig, PathBuf)> {
        let url = std::env::var(LEDGER_URL_ENV)
            .ok()
            .filter(|v| !v.is_empty())
            .or_else(|| self.ledger_url.clone())
            .with_context(|| format!("--ledger-url or {LEDGER_URL_ENV} is required"))?;
        let dir = std::env::var_os(DATA_DIR_ENV)
            .filter(|v| !v.is_empty())
            .map(PathBuf::from)
            .or_else(|| self.data_dir.clone())
            .with_context(|| format!("--data-dir or {DATA_DIR_ENV} is required"))?;
        if !(self.poll_interval.is_finite() && self.poll_interval > 0.0) {
            bail!("--poll-interval must be positive");
        }
        if self.batch_size == 0 {
            bail!("--batch-size must be at least 1");
        }
        Ok((
            SyncConfig {
                source_url: url,
                poll_interval: Duration::from_secs_f64(self.poll_interval),
                batch_size: self.batch_size,
            },
            dir,
        ))
    }
}

#[derive(Debug, Args)]
struct SyncArgs {
    #[command(flatten)]
    source: SourceArgs,
    /// Exit once the copy has caught up with the source.
    #[arg(long)]
    once: bool,
}

#[derive(Debug, Args)]
struct ServeArgs {
    #[command(flatten)]
    source: SourceArgs,
    #[arg(long, default_value_t = 8080)]
    port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    bind: String,
    /// Static UI assets to serve at /.
    #[arg(long)]
    ui_dir: Option<PathBuf>,
    /// Do not send CORS headers.
    #[arg(long)]
    no_cors: bool,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[arg(long)]
    url: String,
    #[arg(long, default_value_t = bench::DEFAULT_CONNECTIONS)]
    connections: usize,
    /// Seconds per query class.
    #[arg(long, default_value_t = 30)]
    duration: u64,
    /// CSV report path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// The corpus the service holds; sampled responses are checked against it.
    #[command(flatten)]
    corpus: CorpusArgs,
    /// Fraction of responses validated against the brute-force oracle.
    #[arg(long, default_value_t = bench::DEFAULT_SAMPLE_RATE)]
    sample_rate: f64,
    /// Skip response validation (the corpus flags are then ignored).
    #[arg(long)]
    no_validate: bool,
}

async fn listen(bind: &str, port: u16) -> Result<TcpListener> {
    let listener = TcpListener::bind((bind, port))
        .await
        .with_context(|| format!("binding {bind}:{port}"))?;
    let addr: SocketAddr = listener.local_addr()?;
    // Tests and scripts read this line to find an ephemeral port.
    println!("listening on http://{addr}");
    Ok(listener)
}

async fn shutdown_signal() {
    let ctrl_c = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    #[cfg(unix)]
    let term = async {
        match tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()) {
            Ok(mut s) => {
                s.recv().await;
            }
            Err(_) => std::future::pending().await,
        }
    };
    #[cfg(not(unix))]
    let term = std::future::pending::<()>();
    tokio::select! {
        _ = ctrl_c => {}
        _ = term => {}
    }
}

async fn run_sim(args: SimArgs) -> Result<()> {
    let ledger = match &args.ledger_file {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            SimLedger::from_recorded(parse_ndjson(&text)?)?
        }
        None => generate(&args.corpus.config())?,
    };
    tracing::info!(size = ledger.len(), root = %ledger.root(), mutable = args.mutable, "simulated ledger ready");
    let server = SimServer::new(ledger, args.mutable, args.max_batch);
    let listener = listen(&args.bind, args.port).await?;
    axum::serve(listener, simserver::router(server))
        .with_graceful_shutdown(shutdown_signal())
        .await?;
    Ok(())
}

/// Opens the ledger copy. A copy that fails verification yields a state that
/// refuses to serve instead of an error.
fn open_copy(config: &SyncConfig, dir: &PathBuf) -> Result<(Arc<ServiceState>, Option<LocalLedger>)> {
    match LocalLedger::open(dir) {
        Ok(opened) => {
            tracing::info!(
                last_seq = opened.ledger.last_seq(),
                unverified_tail = opened.unverified_tail,
                "ledger copy verified"
            );
            let tree = opened.ledger.tree().clone();
            let state = ServiceState::recovered(&config.source_url, opened.docs, tree)?;
            Ok((Arc::new(state), Some(opened.ledger)))
        }
        Err(IngestError::VerificationFailure(reason)) => {
            tracing::error!(%reason, dir = %dir.display(), "ledger copy failed verification; delete it and resync");
            Ok((Arc::new(ServiceState::failed(&config.source_url, reason)), None))
        }
        Err(e) => Err(e).with_context(|| format!("opening ledger copy in {}", dir.display())),
    }
}

async fn run_sync(args: SyncArgs) -> Result<()> {
    let (config, dir) = args.source.resolve()?;
    let (state, ledger) = open_copy(&config, &dir)?;
    let Some(ledger) = ledger else {
        bail!("ledger copy in {} failed verification", dir.display());
    };
    let end = Syncer::new(ledger, config, state)
        .run(args.once, shutdown_signal())
        .await?;
    println!("last_seq {} root {}", end.last_seq, end.root);
    Ok(())
}

async fn run_serve(args: ServeArgs) -> Result<()> {
    let (config, dir) = args.source.resolve()?;
    let (state, ledger) = open_copy(&config, &dir)?;
    let listener = listen(&args.bind, args.port).await?;
    if let Some(ledger) = ledger {
        let syncer = Syncer::new(ledger, config, state.clone());
        tokio::spawn(async move {
            // Failures are logged and surfaced through /stats.
            let _ = syncer.run(false, std::future::pending()).await;
        });
    }
    let options = ApiOptions {
        cors: !args.no_cors,
        ui_dir: args.ui_dir,
    };
    axum::serve(listener, api::router(state, &options))
        .with_graceful_shutdown(shutdown_signal())
        .await?;
    Ok(())
}

async fn run_bench(args: BenchArgs) -> Result<()> {
    let config = BenchConfig {
        connections: args.connections,
        duration: Duration::from_secs(args.duration),
        sample_rate: args.sample_rate,
        ..BenchConfig::new(args.url, (!args.no_validate).then(|| args.corpus.config()))
    };
    let report = bench::run_bench(&config).await?;
    print!("{}", report.table());
    if let Some(out) = &args.out {
        report.write_csv(out)?;
    }
    report.verdict()?;
    Ok(())
}

#[tokio::main]
async fn main() -> Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("info")))
        .with_writer(std::io::stderr)
        .with_ansi(std::io::stderr().is_terminal())
        .init();
    match Cli::parse().command {
        Command::Sim(a) => run_sim(a).await,
        Command::Sync(a) => run_sync(a).await,
        Command::Serve(a) => run_serve(a).await,
        Command::Bench(a) => run_bench(a).await,
    }
}
