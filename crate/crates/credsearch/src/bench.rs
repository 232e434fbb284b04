//! Load generator replaying five fixed query classes against a running
//! service, with a sample of responses checked against the brute-force
//! oracle on a locally regenerated copy of the corpus.
//!
//! Representative queries per class:
//!
//! 1. schemas or credential definitions by schema name
//!    (`type=schema,claim_def`, e.g. "proof of employment")
//! 2. schemas by schema name (`type=schema`, e.g. "driving license")
//! 3. transactions from an organisation, alias misspelled by one edit
//!    (no type filter, e.g. "Desert Schoosl Credit Union")
//! 4. credential definitions by schema name (`type=claim_def`, e.g. "ID card")
//! 5. credential definitions by attribute name (`type=claim_def`, e.g. "salary")

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;
use std::time::{Duration, Instant};

use credsearch_core::enrich::EnrichedDoc;
use credsearch_core::index::{brute_force_search, FieldWeights, Query};
use credsearch_core::ingest::LocalLedger;
use credsearch_core::ledger::{SeqNo, TxnType};
use credsearch_core::sim::{generate, GeneratorConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::api::{SearchResponse, StatsResponse};
use crate::state::SyncPhase;

pub const DEFAULT_CONNECTIONS: usize = 400;
pub const DEFAULT_DURATION: Duration = Duration::from_secs(30);
pub const DEFAULT_SAMPLE_RATE: f64 = 0.01;
const SCORE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid bench configuration: {0}")]
    InvalidConfig(String),
    #[error("target unreachable: {0}")]
    TargetUnreachable(String),
    #[error("service does not hold the expected corpus: {0}")]
    CorpusMismatch(String),
    #[error("{errors} of {requests} requests failed")]
    NonZeroErrorRate { errors: u64, requests: u64 },
    #[error("{mismatches} of {checked} sampled responses disagree with the oracle")]
    SemanticMismatch { mismatches: u64, checked: u64 },
    #[error("writing report: {0}")]
    Io(#[from] std::io::Error),
    #[error("writing CSV: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub target_url: String,
    pub connections: usize,
    pub duration: Duration,
    /// Corpus the service is expected to hold; `None` skips validation.
    pub corpus: Option<GeneratorConfig>,
    pub sample_rate: f64,
    pub seed: u64,
}

impl BenchConfig {
    pub fn new(target_url: impl Into<String>, corpus: Option<GeneratorConfig>) -> Self {
        Self {
            target_url: target_url.into(),
            connections: DEFAULT_CONNECTIONS,
            duration: DEFAULT_DURATION,
            corpus,
            sample_rate: DEFAULT_SAMPLE_RATE,
            seed: 7,
        }
    }

    fn validate(&self) -> Result<(), BenchError> {
        if self.connections == 0 {
            return Err(BenchError::InvalidConfig("connections must be at least 1".into()));
        }
        if self.duration < Duration::from_secs(1) {
            return Err(BenchError::InvalidConfig("duration must be at least 1 s".into()));
        }
        if !(0.0..=1.0).contains(&self.sample_rate) {
            return Err(BenchError::InvalidConfig("sample rate must be within [0, 1]".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryClass {
    pub id: u8,
    pub name: &'static str,
    pub types: Option<&'static str>,
    pub queries: Vec<String>,
}

impl QueryClass {
    fn path(&self, q: &str) -> String {
        let mut p = format!("/search?q={}", encode(q));
        if let Some(t) = self.types {
            p.push_str("&type=");
            p.push_str(t);
        }
        p
    }

    fn query(&self, q: &str) -> Query {
        let query = Query::new(q);
        match self.types {
            None => query,
            Some(t) => query.with_types(t.split(',').filter_map(TxnType::from_param_name)),
        }
    }
}

fn encode(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for b in s.bytes() {
        if b.is_ascii_alphanumeric() || matches!(b, b'-' | b'_' | b'.' | b'~') {
            out.push(b as char);
        } else {
            let _ = write!(out, "%{b:02X}");
        }
    }
    out
}

/// Swaps two adjacent characters inside the longest word of `alias`.
pub fn misspell(alias: &str, rng: &mut impl Rng) -> String {
    let words: Vec<&str> = alias.split(' ').collect();
    let (wi, word) = words
        .iter()
        .enumerate()
        .max_by_key(|(i, w)| (w.chars().count(), std::cmp::Reverse(*i)))
        .expect("non-empty alias");
    let mut chars: Vec<char> = word.chars().collect();
    if chars.len() < 5 {
        return alias.to_string();
    }
    // Find a position whose swap actually changes the word.
    let start = rng.gen_range(1..chars.len() - 1);
    let Some(i) = (start..chars.len() - 1)
        .chain(1..start)
        .find(|&i| chars[i] != chars[i + 1])
    else {
        return alias.to_string();
    };
    chars.swap(i, i + 1);
    let mut out: Vec<String> = words.iter().map(|w| w.to_string()).collect();
    out[wi] = chars.into_iter().collect();
    out.join(" ")
}

/// The five classes with queries drawn from the corpus vocabulary.
pub fn query_classes(corpus: &GeneratorConfig, seed: u64) -> Vec<QueryClass> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let names: Vec<String> = corpus.schema_name_vocab.iter().take(6).cloned().collect();
    let aliases: Vec<String> = corpus
        .alias_vocab
        .iter()
        .take(corpus.n_orgs.clamp(1, 6))
        .map(|a| misspell(a, &mut rng))
        .collect();
    let attrs: Vec<String> = corpus
        .attr_vocab
        .iter()
        .filter(|a| !a.contains('_'))
        .take(6)
        .cloned()
        .collect();
    vec![
        QueryClass {
            id: 1,
            name: "schema or claim_def by schema name",
            types: Some("schema,claim_def"),
            queries: names.clone(),
        },
        QueryClass {
            id: 2,
            name: "schema by schema name",
            types: Some("schema"),
            queries: names.iter().rev().cloned().collect(),
        },
        QueryClass {
            id: 3,
            name: "by author, misspelled alias",
            types: None,
            queries: aliases,
        },
        QueryClass {
            id: 4,
            name: "claim_def by schema name",
            types: Some("claim_def"),
            queries: names,
        },
        QueryClass {
            id: 5,
            name: "claim_def by attribute name",
            types: Some("claim_def"),
            queries: attrs,
        },
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassReport {
    pub class: u8,
    pub name: String,
    pub requests: u64,
    pub errors: u64,
    pub req_per_sec: f64,
    pub p50_ms: f64,
    pub p99_ms: f64,
    pub validated: u64,
    pub mismatches: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub classes: Vec<ClassReport>,
    pub corpus_size: u64,
    pub connections: usize,
    pub duration_secs: f64,
    pub machine_note: String,
    /// Set when requests could not reach the service during the run.
    pub unreachable: Option<String>,
}

#[derive(Serialize)]
struct CsvRow {
    class: u8,
    req_per_sec: f64,
    p50_ms: f64,
    p99_ms: f64,
}

impl BenchReport {
    /// Whether the run passed: target reachable, no errors, no mismatches.
    pub fn verdict(&self) -> Result<(), BenchError> {
        if let Some(reason) = &self.unreachable {
            return Err(BenchError::TargetUnreachable(reason.clone()));
        }
        let errors: u64 = self.classes.iter().map(|c| c.errors).sum();
        if errors > 0 {
            let requests = self.classes.iter().map(|c| c.requests + c.errors).sum();
            return Err(BenchError::NonZeroErrorRate { errors, requests });
        }
        let mismatches: u64 = self.classes.iter().map(|c| c.mismatches).sum();
        if mismatches > 0 {
            let checked = self.classes.iter().map(|c| c.validated).sum();
            return Err(BenchError::SemanticMismatch { mismatches, checked });
        }
        Ok(())
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), BenchError> {
        let mut w = csv::Writer::from_path(path)?;
        for c in &self.classes {
            w.serialize(CsvRow {
                class: c.class,
                req_per_sec: c.req_per_sec,
                p50_ms: c.p50_ms,
                p99_ms: c.p99_ms,
            })?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "corpus {} txns, {} connections, {:.0} s per class ({})",
            self.corpus_size, self.connections, self.duration_secs, self.machine_note
        );
        let _ = writeln!(
            out,
            "{:<5} {:<36} {:>9} {:>7} {:>10} {:>8} {:>8} {:>9}",
            "class", "description", "requests", "errors", "req/s", "p50 ms", "p99 ms", "validated"
        );
        for c in &self.classes {
            let _ = writeln!(
                out,
                "{:<5} {:<36} {:>9} {:>7} {:>10.1} {:>8.2} {:>8.2} {:>5}/{:<3}",
                c.class,
                c.name,
                c.requests,
                c.errors,
                c.req_per_sec,
                c.p50_ms,
                c.p99_ms,
                c.validated - c.mismatches,
                c.validated
            );
        }
        out
    }
}

/// Nearest-rank percentile of sorted samples.
pub fn percentile(sorted: &[Duration], p: f64) -> Duration {
    if sorted.is_empty() {
        return Duration::ZERO;
    }
    let rank = ((p / 100.0) * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

#[derive(Debug, Default)]
struct WorkerResult {
    latencies: Vec<Duration>,
    errors: u64,
    unreachable: Option<String>,
    samples: Vec<(usize, bytes::Bytes)>,
}

async fn worker(
    client: reqwest::Client,
    base: Arc<str>,
    paths: Arc<Vec<String>>,
    id: usize,
    deadline: Instant,
    sample_rate: f64,
    seed: u64,
) -> WorkerResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (id as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    let mut out = WorkerResult::default();
    let mut i = id;
    while Instant::now() < deadline {
        let qi = i % paths.len();
        i += 1;
        let started = Instant::now();
        let resp = client.get(format!("{base}{}", paths[qi])).send().await;
        let outcome = match resp {
            Ok(r) if r.status().is_success() => r.bytes().await.map_err(|e| e.to_string()),
            Ok(r) => Err(format!("status {}", r.status())),
            Err(e) => {
                if e.is_connect() {
                    out.unreachable.get_or_insert_with(|| e.to_string());
                }
                Err(e.to_string())
            }
        };
        match outcome {
            Ok(body) => {
                out.latencies.push(started.elapsed());
                if rng.gen_bool(sample_rate) {
                    out.samples.push((qi, body));
                }
            }
            Err(e) => {
                tracing::debug!(error = %e, "request failed");
                out.errors += 1;
            }
        }
    }
    out
}

/// Regenerated corpus plus memoized oracle answers.
struct Oracle {
    docs: Vec<EnrichedDoc>,
    cache: HashMap<(u8, usize), Vec<(SeqNo, f64)>>,
    totals: HashMap<(u8, usize), usize>,
}

impl Oracle {
    fn new(corpus: &GeneratorConfig) -> Result<Self, BenchError> {
        let sim = generate(corpus).map_err(|e| BenchError::InvalidConfig(e.to_string()))?;
        let mut ledger = LocalLedger::in_memory();
        let batch = ledger
            .verify_and_append(sim.txns())
            .map_err(|e| BenchError::InvalidConfig(e.to_string()))?;
        let mut docs = batch.docs;
        for (seq, alias) in batch.realias {
            docs[(seq.get() - 1) as usize].author_alias = alias;
        }
        Ok(Self {
            docs,
            cache: HashMap::new(),
            totals: HashMap::new(),
        })
    }

    fn matches(&mut self, class: &QueryClass, qi: usize, body: &[u8]) -> bool {
        let key = (class.id, qi);
        if !self.cache.contains_key(&key) {
            let q = class.query(&class.queries[qi]);
            let expected = brute_force_search(&self.docs, &q, &FieldWeights::default()).expect("valid bench query");
            self.totals.insert(key, expected.total);
            self.cache
                .insert(key, expected.hits.iter().map(|h| (h.seq_no, h.score)).collect());
        }
        let Ok(got) = serde_json::from_slice::<SearchResponse>(body) else {
            return false;
        };
        let expected = &self.cache[&key];
        got.total == self.totals[&key]
            && got.hits.len() == expected.len()
            && got
                .hits
                .iter()
                .zip(expected)
                .all(|(g, (seq, score))| g.seq_no == *seq && (g.score - score).abs() <= SCORE_TOLERANCE)
    }
}

async fn fetch_stats(client: &reqwest::Client, base: &str) -> Result<StatsResponse, BenchError> {
    let unreachable = |e: reqwest::Error| BenchError::TargetUnreachable(format!("{base}: {e}"));
    let resp = client.get(format!("{base}/stats")).send().await.map_err(unreachable)?;
    if !resp.status().is_success() {
        return Err(BenchError::TargetUnreachable(format!(
            "{base}/stats answered {}",
            resp.status()
        )));
    }
    resp.json().await.map_err(unreachable)
}

fn machine_note() -> String {
    let cpus = std::thread::available_parallelism().map_or(1, |n| n.get());
    format!(
        "{} {}, {cpus} logical CPUs",
        std::env::consts::OS,
        std::env::consts::ARCH
    )
}

pub async fn run_bench(config: &BenchConfig) -> Result<BenchReport, BenchError> {
    config.validate()?;
    let base: Arc<str> = config.target_url.trim_end_matches('/').into();
    let client = reqwest::Client::builder()
        .pool_max_idle_per_host(config.connections)
        .timeout(Duration::from_secs(10))
        .build()
        .map_err(|e| BenchError::InvalidConfig(e.to_string()))?;

    let stats = fetch_stats(&client, &base).await?;
    if stats.sync_phase == SyncPhase::Fatal {
        return Err(BenchError::TargetUnreachable("service is in the fatal phase".into()));
    }
    let corpus = config.corpus.clone().unwrap_or_default();
    let mut oracle = match &config.corpus {
        Some(c) => {
            let expected = c.expected_len() as u64;
            if stats.last_seq != expected {
                return Err(BenchError::CorpusMismatch(format!(
                    "service holds {} transactions, corpus descriptor has {expected}",
                    stats.last_seq
                )));
            }
            Some(Oracle::new(c)?)
        }
        None => None,
    };

    let mut report = BenchReport {
        classes: Vec::new(),
        corpus_size: stats.last_seq,
        connections: config.connections,
        duration_secs: config.duration.as_secs_f64(),
        machine_note: machine_note(),
        unreachable: None,
    };
    for class in query_classes(&corpus, config.seed) {
        tracing::info!(class = class.id, name = class.name, "running");
        let paths: Arc<Vec<String>> = Arc::new(class.queries.iter().map(|q| class.path(q)).collect());
        let started = Instant::now();
        let deadline = started + config.duration;
        let handles: Vec<_> = (0..config.connections)
            .map(|id| {
                tokio::spawn(worker(
                    client.clone(),
                    base.clone(),
                    paths.clone(),
                    id,
                    deadline,
                    config.sample_rate,
                    config.seed.wrapping_add(u64::from(class.id)),
                ))
            })
            .collect();
        let mut latencies = Vec::new();
        let mut errors = 0;
        let mut samples = Vec::new();
        for h in handles {
            let r = h.await.expect("bench worker panicked");
            latencies.extend(r.latencies);
            errors += r.errors;
            samples.extend(r.samples);
            if report.unreachable.is_none() {
                report.unreachable = r.unreachable;
            }
        }
        let elapsed = started.elapsed().as_secs_f64();
        latencies.sort_unstable();
        let (mut validated, mut mismatches) = (0, 0);
        if let Some(oracle) = oracle.as_mut() {
            for (qi, body) in &samples {
                validated += 1;
                if !oracle.matches(&class, *qi, body) {
                    mismatches += 1;
                    tracing::warn!(class = class.id, query = %class.queries[*qi], "response disagrees with oracle");
                }
            }
        }
        let ms = |d: Duration| d.as_secs_f64() * 1000.0;
        report.classes.push(ClassReport {
            class: class.id,
            name: class.name.to_string(),
            requests: latencies.len() as u64,
            errors,
            req_per_sec: latencies.len() as f64 / elapsed,
            p50_ms: ms(percentile(&latencies, 50.0)),
            p99_ms: ms(percentile(&latencies, 99.0)),
            validated,
            mismatches,
        });
        if report.unreachable.is_some() {
            break;
        }
    }
    Ok(report)
}
